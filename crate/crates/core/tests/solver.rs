use tbopt::{
    compare_strategies, compare_strategies_serial, has_converged, quadrature_cost, rk4_forward,
    solve, sweep, update_controls, AdjointVec, ControlPair, InitialCase, ModelParams,
    SolverOptions, StrategyMask, TimeGrid,
};

fn opts_with(n_steps: usize, horizon: f64) -> SolverOptions {
    SolverOptions {
        grid: TimeGrid::new(0.0, horizon, n_steps).unwrap(),
        ..SolverOptions::default()
    }
}

#[test]
fn uncontrolled_solve_is_one_forward_sweep() {
    let p = ModelParams::default();
    let opts = opts_with(1000, p.horizon);
    let x0 = InitialCase::Case1.initial(p.n_total);
    let report = solve(x0, &p, StrategyMask::UNCONTROLLED, &opts).unwrap();
    let direct = rk4_forward(
        x0,
        &vec![ControlPair::ZERO; opts.grid.len()],
        &p,
        &opts.grid,
    )
    .unwrap();
    assert_eq!(report.iterations, 1);
    assert!(report.converged);
    assert_eq!(report.trajectory.states, direct);
    assert!(report
        .trajectory
        .controls
        .iter()
        .all(|u| *u == ControlPair::ZERO));
}

#[test]
fn converged_solution_is_a_fixed_point() {
    let p = ModelParams::default();
    let opts = SolverOptions::default();
    let x0 = InitialCase::Case1.initial(p.n_total);
    for mask in [
        StrategyMask::STRATEGY_1,
        StrategyMask::STRATEGY_2,
        StrategyMask::STRATEGY_3,
    ] {
        let report = solve(x0, &p, mask, &opts).unwrap();
        assert!(report.converged, "{} did not converge", mask.label());
        assert!(report.iterations <= opts.max_iters);

        let t = &report.trajectory;
        let again = sweep(x0, &t.controls, &p, mask, &opts.grid).unwrap();
        let relaxed = update_controls(&t.controls, &again.characterized, opts.relaxation).unwrap();
        assert!(
            has_converged(&t.controls, &relaxed, &t.states, &again.states, opts.tol),
            "{} moved after one more sweep",
            mask.label()
        );

        assert_eq!(
            *t.adjoints.as_ref().unwrap().last().unwrap(),
            AdjointVec::ZERO
        );
        assert_eq!(quadrature_cost(t, &p).unwrap(), report.objective);
        assert!(report.diagnostics.min_state >= 0.0);
    }
}

#[test]
fn every_iterate_stays_admissible() {
    let p = ModelParams::default();
    let grid = TimeGrid::new(0.0, p.horizon, 800).unwrap();
    let x0 = InitialCase::Case2.initial(p.n_total);
    let mut controls = vec![ControlPair::ZERO; grid.len()];
    for _ in 0..25 {
        let s = sweep(x0, &controls, &p, StrategyMask::STRATEGY_3, &grid).unwrap();
        assert!(s.characterized.iter().all(ControlPair::is_admissible));
        controls = update_controls(&controls, &s.characterized, 0.5).unwrap();
        assert!(controls.iter().all(ControlPair::is_admissible));
    }
}

#[test]
fn combined_strategy_dominates_in_both_cases() {
    let p = ModelParams::default();
    let opts = opts_with(2000, p.horizon);
    for case in [InitialCase::Case1, InitialCase::Case2] {
        let rows = compare_strategies(case.initial(p.n_total), &p, &opts);
        let j: Vec<f64> = rows
            .iter()
            .map(|r| r.outcome.as_ref().unwrap().objective)
            .collect();
        // rows: strategy 1, 2, 3, uncontrolled
        assert!(j[2] <= j[0].min(j[1]), "{case:?}: {j:?}");
        assert!(j[0].min(j[1]) <= j[3], "{case:?}: {j:?}");
    }
}

#[test]
fn parallel_and_serial_comparisons_agree() {
    let p = ModelParams::default();
    let opts = opts_with(600, p.horizon);
    let x0 = InitialCase::Case1.initial(p.n_total);
    let par = compare_strategies(x0, &p, &opts);
    let ser = compare_strategies_serial(x0, &p, &opts);
    let labels: Vec<_> = par.iter().map(|r| r.label()).collect();
    assert_eq!(
        labels,
        ["strategy1", "strategy2", "strategy3", "uncontrolled"]
    );
    for (a, b) in par.iter().zip(&ser) {
        assert_eq!(a.mask, b.mask);
        assert_eq!(a.outcome.as_ref().unwrap(), b.outcome.as_ref().unwrap());
    }
}

#[test]
fn lower_transmission_lowers_terminal_burden() {
    let opts = opts_with(1000, 5.0);
    let mut last = 0.0;
    for beta in [25.0, 50.0, 75.0, 100.0] {
        let p = ModelParams {
            beta,
            ..ModelParams::default()
        };
        let x0 = InitialCase::Case1.initial(p.n_total);
        let r = solve(x0, &p, StrategyMask::STRATEGY_3, &opts).unwrap();
        assert!(r.terminal_infected_plus_latent > last, "beta {beta}");
        last = r.terminal_infected_plus_latent;
    }
}

#[test]
fn without_transmission_susceptibles_ignore_the_controls() {
    let p = ModelParams {
        beta: 0.0,
        ..ModelParams::default()
    };
    let opts = opts_with(1000, p.horizon);
    let x0 = InitialCase::Case1.initial(p.n_total);
    let rows = compare_strategies(x0, &p, &opts);
    let reports: Vec<_> = rows.iter().map(|r| r.outcome.as_ref().unwrap()).collect();
    let reference = &reports[3].trajectory.states;
    for r in &reports {
        for (a, b) in r.trajectory.states.iter().zip(reference) {
            assert_eq!(a.s, b.s);
            assert_eq!(a.l1, b.l1);
        }
    }
    // Latent-only treatment moves L2 into R and leaves S, L1 alone.
    let s2 = &reports[1].trajectory.states;
    let end = s2.len() - 1;
    assert!(s2[end].l2 < reference[end].l2);
    assert!(s2[end].r > reference[end].r);
}

#[test]
fn equal_weights_keep_u1_saturated_longer() {
    let opts = opts_with(2000, 5.0);
    let saturated = |w1: f64| {
        let p = ModelParams {
            w1,
            ..ModelParams::default()
        };
        let x0 = InitialCase::Case1.initial(p.n_total);
        let r = solve(x0, &p, StrategyMask::STRATEGY_3, &opts).unwrap();
        r.trajectory
            .controls
            .iter()
            .take_while(|u| u.u1 == 1.0)
            .count()
    };
    let (heavy, light) = (saturated(500.0), saturated(50.0));
    assert!(heavy > 0);
    assert!(heavy < light, "{heavy} vs {light}");
}

#[test]
fn early_latents_fall_below_ten_percent_within_150_days() {
    let p = ModelParams::default();
    let opts = opts_with(2000, p.horizon);
    for case in [InitialCase::Case1, InitialCase::Case2] {
        let r = solve(case.initial(p.n_total), &p, StrategyMask::STRATEGY_3, &opts).unwrap();
        let k = r
            .trajectory
            .states
            .iter()
            .position(|x| x.l1 / p.n_total < 0.10)
            .unwrap();
        assert!(r.trajectory.grid.node(k) * 365.0 <= 150.0, "{case:?}");
    }
}
