//! The controlled TB transmission model.
//!
//! Five compartments (susceptible, early latent, infectious, persistent
//! latent, treated) in absolute individuals, two bounded treatment controls,
//! and the pure functions built on them: the state vector field, the costate
//! vector field, the Hamiltonian, the running cost, the pointwise optimal
//! control and the basic reproduction number.
//!
//! Everything here is a pure function of its arguments.

use crate::error::{Error, Result};

/// Rate constants, control efficacies, cost weights, population and horizon.
///
/// Rates are per year. `Default` gives the Angola calibration used for all
/// reference runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Transmission coefficient.
    pub beta: f64,
    /// Birth rate, equal to the natural death rate.
    pub mu: f64,
    /// Rate of leaving the early latent class.
    pub delta: f64,
    /// Proportion of early latents progressing to active disease.
    pub phi: f64,
    /// Endogenous reactivation rate of persistent latents.
    pub omega: f64,
    /// Endogenous reactivation rate of treated individuals.
    pub omega_r: f64,
    /// Reinfection reduction factor for persistent latents.
    pub sigma: f64,
    /// Reinfection reduction factor for treated individuals.
    pub sigma_r: f64,
    /// Recovery rate under treatment of active TB.
    pub tau0: f64,
    /// Treatment rate of early latents.
    pub tau1: f64,
    /// Treatment rate of persistent latents.
    pub tau2: f64,
    /// Total (constant) population.
    pub n_total: f64,
    /// Efficacy of the treatment-completion control `u1`.
    pub eps1: f64,
    /// Efficacy of the latent-treatment control `u2`.
    pub eps2: f64,
    /// Cost weight on `u1`.
    pub w1: f64,
    /// Cost weight on `u2`.
    pub w2: f64,
    /// Final time, in years.
    pub horizon: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            beta: 100.0,
            mu: 1.0 / 52.0,
            delta: 12.0,
            phi: 0.05,
            omega: 0.0002,
            omega_r: 0.00002,
            sigma: 0.25,
            sigma_r: 0.25,
            tau0: 2.0,
            tau1: 2.0,
            tau2: 1.0,
            n_total: 30_000.0,
            eps1: 0.5,
            eps2: 0.5,
            w1: 500.0,
            w2: 50.0,
            horizon: 5.0,
        }
    }
}

impl ModelParams {
    /// Names and values of every field, in declaration order.
    pub fn fields(&self) -> [(&'static str, f64); 17] {
        [
            ("beta", self.beta),
            ("mu", self.mu),
            ("delta", self.delta),
            ("phi", self.phi),
            ("omega", self.omega),
            ("omega_r", self.omega_r),
            ("sigma", self.sigma),
            ("sigma_r", self.sigma_r),
            ("tau0", self.tau0),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("n_total", self.n_total),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("w1", self.w1),
            ("w2", self.w2),
            ("horizon", self.horizon),
        ]
    }

    /// Mutable access to a field by name. Returns `None` for unknown names.
    pub fn field_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "beta" => &mut self.beta,
            "mu" => &mut self.mu,
            "delta" => &mut self.delta,
            "phi" => &mut self.phi,
            "omega" => &mut self.omega,
            "omega_r" => &mut self.omega_r,
            "sigma" => &mut self.sigma,
            "sigma_r" => &mut self.sigma_r,
            "tau0" => &mut self.tau0,
            "tau1" => &mut self.tau1,
            "tau2" => &mut self.tau2,
            "n_total" => &mut self.n_total,
            "eps1" => &mut self.eps1,
            "eps2" => &mut self.eps2,
            "w1" => &mut self.w1,
            "w2" => &mut self.w2,
            "horizon" => &mut self.horizon,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.fields() {
            if !value.is_finite() {
                return Err(Error::invalid(name, format!("{value} is not finite")));
            }
        }
        let rates = [
            ("beta", self.beta),
            ("mu", self.mu),
            ("delta", self.delta),
            ("omega", self.omega),
            ("omega_r", self.omega_r),
            ("tau0", self.tau0),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
        ];
        for (name, value) in rates {
            if value < 0.0 {
                return Err(Error::invalid(
                    name,
                    format!("rate must be >= 0, got {value}"),
                ));
            }
        }
        for (name, value) in [
            ("phi", self.phi),
            ("sigma", self.sigma),
            ("sigma_r", self.sigma_r),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::invalid(
                    name,
                    format!("must lie in [0, 1], got {value}"),
                ));
            }
        }
        // Efficacies are an open interval.
        for (name, value) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if value <= 0.0 || value >= 1.0 {
                return Err(Error::invalid(
                    name,
                    format!("must lie in (0, 1), got {value}"),
                ));
            }
        }
        for (name, value) in [
            ("w1", self.w1),
            ("w2", self.w2),
            ("n_total", self.n_total),
            ("horizon", self.horizon),
        ] {
            if value <= 0.0 {
                return Err(Error::invalid(name, format!("must be > 0, got {value}")));
            }
        }
        Ok(())
    }

    #[inline]
    fn force(&self) -> f64 {
        self.beta / self.n_total
    }
}

/// Compartment occupancies, in individuals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVec {
    pub s: f64,
    pub l1: f64,
    pub i: f64,
    pub l2: f64,
    pub r: f64,
}

impl StateVec {
    pub const ZERO: StateVec = StateVec {
        s: 0.0,
        l1: 0.0,
        i: 0.0,
        l2: 0.0,
        r: 0.0,
    };

    pub const fn new(s: f64, l1: f64, i: f64, l2: f64, r: f64) -> Self {
        StateVec { s, l1, i, l2, r }
    }

    pub const fn from_array([s, l1, i, l2, r]: [f64; 5]) -> Self {
        StateVec { s, l1, i, l2, r }
    }

    pub const fn to_array(self) -> [f64; 5] {
        [self.s, self.l1, self.i, self.l2, self.r]
    }

    pub fn total(&self) -> f64 {
        self.s + self.l1 + self.i + self.l2 + self.r
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn min_component(&self) -> f64 {
        self.to_array().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Each compartment divided by `n`.
    pub fn fractions(&self, n: f64) -> [f64; 5] {
        self.to_array().map(|v| v / n)
    }
}

/// Costates of the five compartments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdjointVec {
    pub lam1: f64,
    pub lam2: f64,
    pub lam3: f64,
    pub lam4: f64,
    pub lam5: f64,
}

impl AdjointVec {
    pub const ZERO: AdjointVec = AdjointVec {
        lam1: 0.0,
        lam2: 0.0,
        lam3: 0.0,
        lam4: 0.0,
        lam5: 0.0,
    };

    pub const fn from_array([lam1, lam2, lam3, lam4, lam5]: [f64; 5]) -> Self {
        AdjointVec {
            lam1,
            lam2,
            lam3,
            lam4,
            lam5,
        }
    }

    pub const fn to_array(self) -> [f64; 5] {
        [self.lam1, self.lam2, self.lam3, self.lam4, self.lam5]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Treatment controls at one instant. Admissible values lie in `[0, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlPair {
    /// Effort keeping active cases on treatment until completion.
    pub u1: f64,
    /// Fraction of persistent latents put under treatment.
    pub u2: f64,
}

impl ControlPair {
    pub const ZERO: ControlPair = ControlPair { u1: 0.0, u2: 0.0 };

    pub const fn new(u1: f64, u2: f64) -> Self {
        ControlPair { u1, u2 }
    }

    pub fn is_admissible(&self) -> bool {
        (0.0..=1.0).contains(&self.u1) && (0.0..=1.0).contains(&self.u2)
    }

    pub const fn to_array(self) -> [f64; 2] {
        [self.u1, self.u2]
    }

    pub const fn from_array([u1, u2]: [f64; 2]) -> Self {
        ControlPair { u1, u2 }
    }
}

/// Which controls a strategy may use. A disabled control is identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrategyMask {
    pub enable_u1: bool,
    pub enable_u2: bool,
}

impl StrategyMask {
    pub const UNCONTROLLED: StrategyMask = StrategyMask {
        enable_u1: false,
        enable_u2: false,
    };
    /// Treatment completion only.
    pub const STRATEGY_1: StrategyMask = StrategyMask {
        enable_u1: true,
        enable_u2: false,
    };
    /// Latent treatment only.
    pub const STRATEGY_2: StrategyMask = StrategyMask {
        enable_u1: false,
        enable_u2: true,
    };
    /// Both controls.
    pub const STRATEGY_3: StrategyMask = StrategyMask {
        enable_u1: true,
        enable_u2: true,
    };

    /// Maps `0` (uncontrolled) and `1..=3` to the corresponding mask.
    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            0 => Some(Self::UNCONTROLLED),
            1 => Some(Self::STRATEGY_1),
            2 => Some(Self::STRATEGY_2),
            3 => Some(Self::STRATEGY_3),
            _ => None,
        }
    }

    pub fn index(&self) -> u8 {
        match (self.enable_u1, self.enable_u2) {
            (false, false) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (true, true) => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.index() {
            0 => "uncontrolled",
            1 => "strategy1",
            2 => "strategy2",
            _ => "strategy3",
        }
    }

    pub fn is_uncontrolled(&self) -> bool {
        !self.enable_u1 && !self.enable_u2
    }
}

fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("non-finite {what}: {values:?}")))
    }
}

/// State vector field without input checks; used inside the sweeps.
#[inline]
pub(crate) fn state_field(x: &[f64; 5], u: ControlPair, p: &ModelParams) -> [f64; 5] {
    let [s, l1, i, l2, r] = *x;
    let force = p.force() * i;
    let treat_i = p.tau0 + p.eps1 * u.u1;
    let treat_l2 = p.tau2 + p.eps2 * u.u2;
    [
        p.mu * p.n_total - force * s - p.mu * s,
        force * (s + p.sigma * l2 + p.sigma_r * r) - (p.delta + p.tau1 + p.mu) * l1,
        p.phi * p.delta * l1 + p.omega * l2 + p.omega_r * r - (treat_i + p.mu) * i,
        (1.0 - p.phi) * p.delta * l1 - p.sigma * force * l2 - (p.omega + treat_l2 + p.mu) * l2,
        treat_i * i + p.tau1 * l1 + treat_l2 * l2 - p.sigma_r * force * r - (p.omega_r + p.mu) * r,
    ]
}

/// Costate vector field without input checks; used inside the sweeps.
#[inline]
pub(crate) fn adjoint_field(
    lam: &[f64; 5],
    x: &[f64; 5],
    u: ControlPair,
    p: &ModelParams,
) -> [f64; 5] {
    let [l1, l2, l3, l4, l5] = *lam;
    let [s, _, i, lat2, r] = *x;
    let b = p.force();
    let treat_i = p.tau0 + p.eps1 * u.u1;
    let treat_l2 = p.tau2 + p.eps2 * u.u2;
    [
        l1 * (b * i + p.mu) - l2 * b * i,
        l2 * (p.delta + p.tau1 + p.mu)
            - l3 * p.phi * p.delta
            - l4 * (1.0 - p.phi) * p.delta
            - l5 * p.tau1,
        -1.0 + l1 * b * s - l2 * b * (s + p.sigma * lat2 + p.sigma_r * r)
            + l3 * (treat_i + p.mu)
            + l4 * p.sigma * b * lat2
            - l5 * (treat_i - p.sigma_r * b * r),
        -1.0 - l2 * b * i * p.sigma - l3 * p.omega
            + l4 * (p.sigma * b * i + p.omega + treat_l2 + p.mu)
            - l5 * treat_l2,
        -l2 * p.sigma_r * b * i - l3 * p.omega_r + l5 * (p.sigma_r * b * i + p.omega_r + p.mu),
    ]
}

/// Time derivative of the five compartments under controls `u`.
///
/// The components always sum to `mu * (n_total - x.total())`, so the
/// population stays at `n_total` when it starts there.
pub fn state_rhs(x: &StateVec, u: ControlPair, p: &ModelParams) -> Result<StateVec> {
    ensure_finite("state", &x.to_array())?;
    ensure_finite("control", &u.to_array())?;
    Ok(StateVec::from_array(state_field(&x.to_array(), u, p)))
}

/// Time derivative of the costates: minus the gradient of the Hamiltonian
/// with respect to the state.
pub fn adjoint_rhs(
    lam: &AdjointVec,
    x: &StateVec,
    u: ControlPair,
    p: &ModelParams,
) -> Result<AdjointVec> {
    ensure_finite("adjoint", &lam.to_array())?;
    ensure_finite("state", &x.to_array())?;
    ensure_finite("control", &u.to_array())?;
    Ok(AdjointVec::from_array(adjoint_field(
        &lam.to_array(),
        &x.to_array(),
        u,
        p,
    )))
}

/// Integrand of the objective: infectious plus persistent latent
/// individuals, plus quadratic control costs.
pub fn running_cost(x: &StateVec, u: ControlPair, p: &ModelParams) -> f64 {
    x.i + x.l2 + 0.5 * p.w1 * u.u1 * u.u1 + 0.5 * p.w2 * u.u2 * u.u2
}

pub fn hamiltonian(x: &StateVec, lam: &AdjointVec, u: ControlPair, p: &ModelParams) -> f64 {
    let f = state_field(&x.to_array(), u, p);
    running_cost(x, u, p)
        + lam
            .to_array()
            .iter()
            .zip(f)
            .map(|(l, fk)| l * fk)
            .sum::<f64>()
}

/// Partial derivatives of the Hamiltonian with respect to `(u1, u2)`.
pub fn hamiltonian_control_gradient(
    x: &StateVec,
    lam: &AdjointVec,
    u: ControlPair,
    p: &ModelParams,
) -> [f64; 2] {
    [
        p.w1 * u.u1 - p.eps1 * x.i * (lam.lam3 - lam.lam5),
        p.w2 * u.u2 - p.eps2 * x.l2 * (lam.lam4 - lam.lam5),
    ]
}

/// Pointwise minimizer of the Hamiltonian over `[0, 1]²`, with disabled
/// controls held at zero.
pub fn characterize_controls(
    x: &StateVec,
    lam: &AdjointVec,
    p: &ModelParams,
    mask: StrategyMask,
) -> ControlPair {
    let u1 = if mask.enable_u1 {
        clamp_unit(p.eps1 * x.i * (lam.lam3 - lam.lam5) / p.w1)
    } else {
        0.0
    };
    let u2 = if mask.enable_u2 {
        clamp_unit(p.eps2 * x.l2 * (lam.lam4 - lam.lam5) / p.w2)
    } else {
        0.0
    };
    ControlPair { u1, u2 }
}

// `min(max(0, v), 1)`; NaN maps to 0 so the output stays admissible.
#[inline]
fn clamp_unit(v: f64) -> f64 {
    if v > 0.0 {
        v.min(1.0)
    } else {
        0.0
    }
}

/// Basic reproduction number of the uncontrolled system. Linear in `beta`.
pub fn basic_reproduction_number(p: &ModelParams) -> Result<f64> {
    if p.mu <= 0.0 {
        return Err(Error::Domain(format!("mu must be > 0, got {}", p.mu)));
    }
    let num = p.beta * p.delta * (p.omega + p.phi * p.mu) * (p.omega_r + p.mu);
    let den = p.mu * (p.omega_r + p.tau0 + p.mu) * (p.delta + p.mu) * (p.omega + p.mu);
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::Domain(format!("degenerate denominator {den}")));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn case1() -> StateVec {
        StateVec::new(19000.0, 9000.0, 1250.0, 500.0, 250.0)
    }

    #[test]
    fn disease_free_point_is_stationary() {
        let p = ModelParams::default();
        let x = StateVec::new(p.n_total, 0.0, 0.0, 0.0, 0.0);
        let dx = state_rhs(&x, ControlPair::ZERO, &p).unwrap();
        assert_eq!(dx, StateVec::ZERO);
    }

    #[test]
    fn susceptible_derivative_at_case1() {
        let p = ModelParams::default();
        let dx = state_rhs(&case1(), ControlPair::ZERO, &p).unwrap();
        let expected = 30000.0 / 52.0 - (100.0 / 30000.0) * 1250.0 * 19000.0 - 19000.0 / 52.0;
        assert!((dx.s - expected).abs() < 1e-9);
        assert!((dx.s - -78955.13).abs() < 0.01);
    }

    #[test]
    fn non_finite_state_is_rejected() {
        let p = ModelParams::default();
        let mut x = case1();
        x.l2 = f64::NAN;
        assert!(matches!(
            state_rhs(&x, ControlPair::ZERO, &p),
            Err(Error::Domain(_))
        ));
        let lam = AdjointVec {
            lam4: f64::INFINITY,
            ..AdjointVec::ZERO
        };
        assert!(adjoint_rhs(&lam, &case1(), ControlPair::ZERO, &p).is_err());
    }

    #[test]
    fn adjoint_source_terms() {
        let p = ModelParams::default();
        let d = adjoint_rhs(&AdjointVec::ZERO, &StateVec::ZERO, ControlPair::ZERO, &p).unwrap();
        assert_eq!(d.to_array(), [0.0, 0.0, -1.0, -1.0, 0.0]);
    }

    // Frozen from a central-difference gradient of H computed independently
    // (numpy), step 1e-6 * max(1, |x_k|).
    #[test]
    fn adjoint_matches_frozen_finite_difference_values() {
        let p = ModelParams::default();
        let ones = AdjointVec::from_array([1.0; 5]);
        let d = adjoint_rhs(&ones, &case1(), ControlPair::ZERO, &p).unwrap();
        let fd = [
            0.019230769172090253,
            0.019230769491211202,
            -0.9807692322283401,
            -0.980769229499856,
            0.01923078525578603,
        ];
        for (a, b) in d.to_array().iter().zip(fd) {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "{a} vs {b}");
        }

        let lam = AdjointVec::from_array([0.3, -1.2, 2.5, 0.7, -0.4]);
        let d = adjoint_rhs(&lam, &case1(), ControlPair::new(0.3, 0.6), &p).unwrap();
        let fd = [
            6.25576923017721,
            -25.50307692258179,
            101.24141027336009,
            2.4222681968240067,
            0.8255830325651914,
        ];
        for (a, b) in d.to_array().iter().zip(fd) {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn hamiltonian_special_cases() {
        let p = ModelParams::default();
        let x = case1();
        assert_eq!(
            hamiltonian(&x, &AdjointVec::ZERO, ControlPair::ZERO, &p),
            x.i + x.l2
        );
        assert_eq!(
            hamiltonian(&x, &AdjointVec::ZERO, ControlPair::new(1.0, 1.0), &p),
            x.i + x.l2 + 275.0
        );
        let ones = AdjointVec::from_array([1.0; 5]);
        let h = hamiltonian(&x, &ones, ControlPair::ZERO, &p);
        let expected = x.i + x.l2 + p.mu * p.n_total - p.mu * x.total();
        assert!((h - expected).abs() < 1e-9 * expected.abs().max(1.0));
    }

    #[test]
    fn control_characterization_examples() {
        let p = ModelParams::default();
        let mut x = case1();
        let lam = AdjointVec {
            lam3: 3.0,
            lam5: 3.0,
            ..AdjointVec::ZERO
        };
        assert_eq!(
            characterize_controls(&x, &lam, &p, StrategyMask::STRATEGY_3).u1,
            0.0
        );

        x.i = 1000.0;
        let lam = AdjointVec {
            lam3: 0.4,
            ..AdjointVec::ZERO
        };
        let u = characterize_controls(&x, &lam, &p, StrategyMask::STRATEGY_1);
        assert!((u.u1 - 0.4).abs() < 1e-15);

        x.l2 = 10000.0;
        let lam = AdjointVec {
            lam4: 10.0,
            ..AdjointVec::ZERO
        };
        let u = characterize_controls(&x, &lam, &p, StrategyMask::STRATEGY_2);
        assert_eq!(u.u2, 1.0);
        assert_eq!(u.u1, 0.0);
    }

    #[test]
    fn mask_zeroes_disabled_controls() {
        let p = ModelParams::default();
        let lam = AdjointVec::from_array([0.0, 0.0, 10.0, 10.0, 0.0]);
        let u = characterize_controls(&case1(), &lam, &p, StrategyMask::UNCONTROLLED);
        assert_eq!(u, ControlPair::ZERO);
        for k in 0..4 {
            assert_eq!(StrategyMask::from_index(k).unwrap().index(), k);
        }
        assert!(StrategyMask::from_index(4).is_none());
    }

    #[test]
    fn running_cost_examples() {
        let p = ModelParams::default();
        assert_eq!(running_cost(&StateVec::ZERO, ControlPair::ZERO, &p), 0.0);
        assert_eq!(running_cost(&case1(), ControlPair::ZERO, &p), 1750.0);
        assert_eq!(
            running_cost(&StateVec::ZERO, ControlPair::new(1.0, 1.0), &p),
            275.0
        );
    }

    #[test]
    fn reproduction_number() {
        let p = ModelParams::default();
        let r0 = basic_reproduction_number(&p).unwrap();
        assert!((r0 - 2.96).abs() <= 0.01, "R0 = {r0}");
        assert!(r0 > 1.0);

        let zero = ModelParams { beta: 0.0, ..p };
        assert_eq!(basic_reproduction_number(&zero).unwrap(), 0.0);
        let half = ModelParams { beta: 50.0, ..p };
        assert!((basic_reproduction_number(&half).unwrap() - r0 / 2.0).abs() < 1e-15);

        let no_mu = ModelParams { mu: 0.0, ..p };
        assert!(matches!(
            basic_reproduction_number(&no_mu),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn validation_rejects_out_of_range_values() {
        assert!(ModelParams::default().validate().is_ok());
        let p = ModelParams::default();
        for bad in [
            ModelParams { eps1: 1.0, ..p },
            ModelParams { eps2: 0.0, ..p },
            ModelParams { phi: 1.5, ..p },
            ModelParams { w1: 0.0, ..p },
            ModelParams { beta: -1.0, ..p },
            ModelParams {
                horizon: f64::NAN,
                ..p
            },
        ] {
            assert!(
                matches!(bad.validate(), Err(Error::Invalid { .. })),
                "{bad:?}"
            );
        }
    }

    fn state_strategy(n: f64) -> impl Strategy<Value = StateVec> {
        proptest::array::uniform5(0.0..n).prop_map(StateVec::from_array)
    }

    proptest! {
        #[test]
        fn vector_field_conserves_population(
            x in state_strategy(30_000.0),
            u1 in 0.0..=1.0f64,
            u2 in 0.0..=1.0f64,
        ) {
            let p = ModelParams::default();
            let dx = state_rhs(&x, ControlPair::new(u1, u2), &p).unwrap();
            let expected = p.mu * p.n_total - p.mu * x.total();
            let scale = p.force() * x.i * x.total() + p.delta * x.l1 + p.tau0 * x.i + p.mu * p.n_total + 1.0;
            prop_assert!((dx.total() - expected).abs() <= 1e-9 * scale);
        }

        #[test]
        fn characterized_controls_stay_admissible(
            x in state_strategy(30_000.0),
            lam in proptest::array::uniform5(-1e12..1e12f64),
            mask in 0u8..4,
        ) {
            let p = ModelParams::default();
            let u = characterize_controls(&x, &AdjointVec::from_array(lam), &p, StrategyMask::from_index(mask).unwrap());
            prop_assert!(u.is_admissible());
        }

        #[test]
        fn interior_controls_are_stationary(
            x in state_strategy(30_000.0),
            lam in proptest::array::uniform5(-0.5..0.5f64),
        ) {
            let p = ModelParams::default();
            let lam = AdjointVec::from_array(lam);
            let u = characterize_controls(&x, &lam, &p, StrategyMask::STRATEGY_3);
            let g = hamiltonian_control_gradient(&x, &lam, u, &p);
            if u.u1 > 0.0 && u.u1 < 1.0 {
                prop_assert!(g[0].abs() <= 1e-9, "dH/du1 = {}", g[0]);
            }
            if u.u2 > 0.0 && u.u2 < 1.0 {
                prop_assert!(g[1].abs() <= 1e-9, "dH/du2 = {}", g[1]);
            }
        }
    }
}
