use std::fs;
use std::path::PathBuf;
use std::process::Command;

/// Runs the binary from `tests/data` and compares stdout with
/// `tests/golden/<name>.txt`. `UPDATE_GOLDEN=1` rewrites the file instead.
fn assert_golden(name: &str, args: &[&str], expect_code: i32) {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests");
    let output = Command::new(env!("CARGO_BIN_EXE_trivmeas"))
        .current_dir(root.join("data"))
        .args(args)
        .output()
        .expect("failed to spawn binary");
    assert_eq!(
        output.status.code(),
        Some(expect_code),
        "{args:?} exited with {:?}\nstderr:\n{}",
        output.status,
        String::from_utf8_lossy(&output.stderr),
    );
    let path = root.join("golden").join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &output.stdout).unwrap();
        return;
    }
    let expected = fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&expected),
        "stdout of {args:?} differs from {name}.txt"
    );
}

#[test]
fn lattice_check() {
    assert_golden("lattice_check_fig2", &["lattice", "check", "fig2.lat"], 0);
    assert_golden("lattice_check_m3", &["lattice", "check", "m3.lat"], 1);
    assert_golden("lattice_check_n5", &["lattice", "check", "n5.lat"], 1);
}

#[test]
fn lattice_levels() {
    assert_golden("lattice_levels_fig2", &["lattice", "levels", "fig2.lat"], 0);
}

#[test]
fn lattice_sets() {
    assert_golden("lattice_sets_fig2", &["lattice", "sets", "fig2.lat"], 0);
    assert_golden("lattice_sets_m3", &["lattice", "sets", "m3.lat"], 1);
}

#[test]
fn lattice_iso() {
    assert_golden("lattice_iso_fig2", &["lattice", "iso", "fig2.lat"], 0);
}

#[test]
fn lattice_profiles() {
    assert_golden("lattice_profiles_fig2", &["lattice", "profiles", "fig2.lat"], 0);
    assert_golden(
        "lattice_profiles_fig2_text",
        &["lattice", "profiles", "fig2.lat", "--format", "text"],
        0,
    );
    assert_golden(
        "lattice_profiles_diamond_level_two",
        &["lattice", "profiles", "diamond.lat", "--reading", "level-two", "--format", "text"],
        0,
    );
}

#[test]
fn lattice_recipe() {
    assert_golden("lattice_recipe_diamond", &["lattice", "recipe", "diamond.lat"], 0);
}

#[test]
fn measure_eval() {
    assert_golden("measure_eval_lebesgue", &["measure", "eval", "lebesgue", "--depth", "2"], 0);
    assert_golden(
        "measure_eval_tally",
        &["measure", "eval", "tally:two_stage.sched", "--depth", "3"],
        0,
    );
}

#[test]
fn measure_audit() {
    assert_golden("measure_audit_tally", &["measure", "audit", "tally:two_stage.sched"], 0);
    assert_golden(
        "measure_audit_table",
        &["measure", "audit", "functional:swap.tt", "--depth", "4"],
        0,
    );
}

#[test]
fn measure_atoms() {
    assert_golden(
        "measure_atoms_tally",
        &["measure", "atoms", "tally:two_stage.sched", "--depth", "5", "--delta", "1/16"],
        0,
    );
}

#[test]
fn measure_convex() {
    assert_golden(
        "measure_convex",
        &["measure", "convex", "lebesgue", "point:+0", "--alpha", "1/4", "--depth", "2"],
        0,
    );
}

#[test]
fn functional_apply() {
    assert_golden("functional_apply_table", &["functional", "apply", "swap.tt", "--input", "0110"], 0);
}

#[test]
fn functional_induced() {
    assert_golden(
        "functional_induced_table",
        &["functional", "induced", "swap.tt", "--sigma", "01", "--sigma", "ε"],
        0,
    );
}

#[test]
fn functional_verify() {
    assert_golden("functional_verify_table", &["functional", "verify", "swap.tt"], 0);
}

#[test]
fn tally_simulate() {
    assert_golden(
        "tally_simulate_phi",
        &["tally", "simulate", "two_stage.sched", "--input", "0+1"],
        0,
    );
    assert_golden(
        "tally_simulate_psi",
        &["tally", "simulate", "two_stage.sched", "--input", "0+1", "--mode", "psi"],
        0,
    );
    assert_golden(
        "tally_simulate_test",
        &["tally", "simulate", "test:small.test", "--input", "+0", "--blocks", "4"],
        0,
    );
}

#[test]
fn tally_measure() {
    assert_golden("tally_measure_atoms", &["tally", "measure", "two_stage.sched", "--depth", "5"], 0);
    assert_golden(
        "tally_measure_components",
        &["tally", "measure", "two_stage.sched", "--components"],
        0,
    );
    assert_golden(
        "tally_measure_psi",
        &["tally", "measure", "still.sched", "--mode", "psi", "--depth", "4"],
        0,
    );
}

#[test]
fn tally_theta() {
    assert_golden("tally_theta", &["tally", "theta", "two_stage.sched", "--input", "01+0"], 0);
}

#[test]
fn test_bound() {
    assert_golden("test_bound_zeros", &["test", "bound", "zeros"], 0);
    assert_golden("test_bound_inflated", &["test", "bound", "inflated"], 1);
    assert_golden(
        "test_bound_listed",
        &["test", "bound", "small.test", "--depth", "2", "--budget", "3"],
        0,
    );
}

#[test]
fn test_capture() {
    assert_golden(
        "test_capture_listed",
        &["test", "capture", "small.test", "--input", "110+1", "--depth", "2"],
        0,
    );
}

#[test]
fn bad_input_is_a_clean_error() {
    let output = Command::new(env!("CARGO_BIN_EXE_trivmeas"))
        .args(["measure", "eval", "nonsense"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(output.stdout.is_empty());
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("error: unknown measure"));
}

#[test]
fn output_is_repeatable() {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_trivmeas"))
            .current_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data"))
            .args(["lattice", "profiles", "fig2.lat"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}
