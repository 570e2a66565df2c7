use campus_milp::mps::{parse_mps, read_mps, to_mps_string, write_mps};
use campus_milp::{
    solve_external, solve_lp, solve_milp, LpStatus, MilpError, MilpModel, MilpOptions,
    MilpStatus, Sense,
};

#[test]
fn maximize_single_variable() {
    let mut m = MilpModel::new("one");
    let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
    m.set_objective_coeff(x, 1.0);
    m.add_row("cap", vec![(x, 1.0)], Sense::Le, 3.0).unwrap();
    let s = solve_lp(&m).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.values[0] - 3.0).abs() < 1e-12);
    assert!((s.objective - 3.0).abs() < 1e-12);
}

#[test]
fn two_by_two_vertex() {
    let mut m = MilpModel::new("v");
    let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
    let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
    m.set_objective_coeff(x, 1.0);
    m.set_objective_coeff(y, 1.0);
    m.add_row("a", vec![(x, 1.0), (y, 2.0)], Sense::Le, 4.0).unwrap();
    m.add_row("b", vec![(x, 3.0), (y, 1.0)], Sense::Le, 6.0).unwrap();
    let s = solve_lp(&m).unwrap();
    assert!((s.values[0] - 1.6).abs() < 1e-9);
    assert!((s.values[1] - 1.2).abs() < 1e-9);
    assert!((s.objective - 2.8).abs() < 1e-9);
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let mut m = MilpModel::new("inf");
    let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
    m.add_row("lo", vec![(x, 1.0)], Sense::Ge, 5.0).unwrap();
    m.add_row("hi", vec![(x, 1.0)], Sense::Le, 3.0).unwrap();
    assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Infeasible);
}

fn fixed_binary_model() -> MilpModel {
    let mut m = MilpModel::new("fixed");
    let x = m.add_continuous("x", 0.0, 10.0).unwrap();
    let b1 = m.add_var("b1", 1.0, 1.0, campus_milp::VarKind::Binary).unwrap();
    let b2 = m.add_var("b2", 0.0, 0.0, campus_milp::VarKind::Binary).unwrap();
    m.set_objective_coeff(x, 2.0);
    m.set_objective_coeff(b1, -1.0);
    m.add_row("r", vec![(x, 1.0), (b1, 3.0), (b2, 5.0)], Sense::Le, 7.5).unwrap();
    m
}

#[test]
fn all_binaries_fixed_equals_lp() {
    let m = fixed_binary_model();
    let lp = solve_lp(&m).unwrap();
    let mip = solve_milp(&m, &MilpOptions::default()).unwrap();
    assert_eq!(mip.status, MilpStatus::Optimal);
    assert!((lp.objective - mip.objective).abs() < 1e-12);
    assert_eq!(mip.nodes, 1);
}

/// Knapsack whose LP bound is far from the integer optimum.
fn gapped_instance() -> MilpModel {
    let mut m = MilpModel::new("gapped");
    let w = [12.0, 7.0, 11.0, 8.0, 9.0, 6.0, 5.0, 14.0];
    let v = [24.0, 13.0, 23.0, 15.0, 16.0, 11.0, 9.0, 29.0];
    let ids: Vec<_> = (0..8).map(|i| m.add_binary(format!("b{i}")).unwrap()).collect();
    for i in 0..8 {
        m.set_objective_coeff(ids[i], v[i]);
    }
    m.add_row(
        "cap",
        ids.iter().zip(w).map(|(&i, w)| (i, w)).collect(),
        Sense::Le,
        26.0,
    )
    .unwrap();
    m
}

#[test]
fn loose_gap_target_is_honoured() {
    let m = gapped_instance();
    let loose = solve_milp(&m, &MilpOptions { gap: 0.1, ..Default::default() }).unwrap();
    assert!(loose.gap <= 0.1);
    assert!(matches!(loose.status, MilpStatus::Optimal | MilpStatus::Feasible));
    let exact = solve_milp(&m, &MilpOptions { gap: 0.0, ..Default::default() }).unwrap();
    assert!(loose.objective <= exact.objective + 1e-9);
    assert!(loose.best_bound + 1e-9 >= exact.objective);
}

#[test]
fn node_limit_reports_truthful_gap() {
    let m = gapped_instance();
    let s = solve_milp(
        &m,
        &MilpOptions { gap: 0.0, node_limit: Some(1), ..Default::default() },
    )
    .unwrap();
    if s.status == MilpStatus::Feasible {
        assert!(s.gap > 0.0);
        assert!(s.best_bound > s.objective);
    }
}

#[test]
fn mps_skeleton_sections_in_order() {
    let mut m = MilpModel::new("skel");
    let x = m.add_continuous("x", 0.0, 1.0).unwrap();
    m.set_objective_coeff(x, 1.0);
    let text = to_mps_string(&m).unwrap();
    let pos: Vec<usize> = ["NAME", "ROWS", "COLUMNS", "BOUNDS", "ENDATA"]
        .iter()
        .map(|s| text.find(s).unwrap())
        .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn binaries_use_markers_and_bv() {
    let m = gapped_instance();
    let text = to_mps_string(&m).unwrap();
    assert!(text.contains("'MARKER' 'INTORG'"));
    assert!(text.contains("'MARKER' 'INTEND'"));
    assert!(text.contains(" BV BND b0"));
}

#[test]
fn mps_file_round_trip_solves_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.mps");
    let m = gapped_instance();
    write_mps(&m, &path).unwrap();
    let back = read_mps(&path).unwrap();
    assert_eq!(back.statistics(), m.statistics());
    let a = solve_milp(&m, &MilpOptions::default()).unwrap();
    let b = solve_milp(&back, &MilpOptions::default()).unwrap();
    assert_eq!(a.objective, b.objective);
    assert!(parse_mps(&to_mps_string(&back).unwrap()).is_ok());
}

#[test]
fn unwritable_path_errors() {
    let m = gapped_instance();
    let err = write_mps(&m, std::path::Path::new("/nonexistent-dir/x/y.mps")).unwrap_err();
    assert!(matches!(err, MilpError::Io { .. }));
}

#[test]
fn missing_executable_names_command() {
    let dir = tempfile::tempdir().unwrap();
    let err = solve_external(&gapped_instance(), "no-such-solver-binary --flag", dir.path())
        .unwrap_err();
    match err {
        MilpError::External { command, .. } => assert!(command.contains("no-such-solver-binary")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn external_script_reporting_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("fake.sh");
    std::fs::write(&script, "#!/bin/sh\necho 'status infeasible' > \"$2\"\n").unwrap();
    let status = std::process::Command::new("chmod")
        .arg("+x")
        .arg(&script)
        .status()
        .unwrap();
    assert!(status.success());
    let sol = solve_external(&gapped_instance(), script.to_str().unwrap(), dir.path()).unwrap();
    assert_eq!(sol.status, MilpStatus::Infeasible);
    assert!(sol.values.is_empty());
}
