use std::fmt::Write as _;
use std::sync::Arc;

use trivmeas::approximation::classify_input;
use trivmeas::functionals::{induced_measure, tt_apply, tt_verify, PreimageMode};
use trivmeas::lattice::{
    build_set_system, check_distributive, classify_meet_irreducible, compute_levels,
    emit_measure_recipe, lr_profiles, verify_set_system_iso, FiniteLattice, KhatReading,
};
use trivmeas::measures::{
    atom_candidates, check_additivity, convex_sum, measure_eval, MeasureOracle, SharedMeasure,
};
use trivmeas::mltests::{audit_bounds, capture_stage, check_generalized, TestKind};
use trivmeas::tally::{
    make_theta_test, tally_induced_measure, tally_output, tally_output_filled, theta_search,
    ScheduleMatch, ThetaPredicate, TallyMode,
};
use trivmeas::{BitString, DyadicRational};

use crate::load::{self, CliResult};
use crate::{
    Command, Format, FunctionalCmd, LatticeCmd, MeasureCmd, PreimageArg, ReadingArg, SigmaArgs,
    TallyCmd, TallyModeArg, TestCmd,
};

pub struct Outcome {
    pub text: String,
    /// An audit found a violation.
    pub violation: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self {
            text,
            violation: false,
        }
    }

    fn flagged(text: String, violation: bool) -> Self {
        Self { text, violation }
    }
}

pub fn run(cmd: Command) -> CliResult<Outcome> {
    match cmd {
        Command::Lattice(c) => lattice(c),
        Command::Measure(c) => measure(c),
        Command::Functional(c) => functional(c),
        Command::Tally(c) => tally(c),
        Command::Test(c) => test(c),
    }
}

/// Returns the gate's report when `l` is not distributive.
fn distributivity_gate(l: &FiniteLattice) -> CliResult<Option<Outcome>> {
    let v = check_distributive(l).map_err(|e| e.to_string())?;
    if v.is_distributive() {
        Ok(None)
    } else {
        Ok(Some(Outcome::flagged(
            format!("lattice\t{}\nnot distributive\nwitness\t{}\n", l.name(), v.describe(l)),
            true,
        )))
    }
}

fn lattice(cmd: LatticeCmd) -> CliResult<Outcome> {
    let file = match &cmd {
        LatticeCmd::Check { file }
        | LatticeCmd::Levels { file }
        | LatticeCmd::Sets { file }
        | LatticeCmd::Iso { file }
        | LatticeCmd::Recipe { file }
        | LatticeCmd::Profiles { file, .. } => file.clone(),
    };
    let l = load::lattice(&file)?;
    if let Some(report) = distributivity_gate(&l)? {
        return Ok(report);
    }
    let err = |e: trivmeas::lattice::LatticeError| e.to_string();
    match cmd {
        LatticeCmd::Check { .. } => Ok(Outcome::ok(format!(
            "lattice\t{}\nelements\t{}\ndistributive\n",
            l.name(),
            l.len()
        ))),
        LatticeCmd::Levels { .. } => {
            let levels = compute_levels(&l).map_err(err)?;
            let classes = classify_meet_irreducible(&l).map_err(err)?;
            let mut out = String::new();
            let max = levels.iter().copied().max().unwrap_or(0);
            for k in 1..=max {
                let ids: Vec<&str> = (0..l.len()).filter(|&a| levels[a] == k).map(|a| l.id(a)).collect();
                writeln!(out, "level {k}: {}", ids.join(" ")).unwrap();
            }
            let pick = |want: bool| -> String {
                (0..l.len())
                    .filter(|&a| classes[a] == Some(want))
                    .map(|a| l.id(a).to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            writeln!(out, "meet-irreducible: {}", pick(true)).unwrap();
            writeln!(out, "meet-reducible: {}", pick(false)).unwrap();
            Ok(Outcome::ok(out))
        }
        LatticeCmd::Sets { .. } => {
            let s = build_set_system(&l).map_err(err)?;
            Ok(Outcome::ok(s.report(&l)))
        }
        LatticeCmd::Iso { .. } => {
            let s = build_set_system(&l).map_err(err)?;
            let report = verify_set_system_iso(&l, &s);
            Ok(Outcome::flagged(report.render(&l), !report.is_clean()))
        }
        LatticeCmd::Profiles {
            format,
            reading,
            max_basics,
            ..
        } => {
            let s = build_set_system(&l).map_err(err)?;
            let reading = match reading {
                ReadingArg::AllBasics => KhatReading::AllBasics,
                ReadingArg::LevelTwo => KhatReading::LevelTwo,
            };
            let report = lr_profiles(&l, &s, reading, max_basics).map_err(err)?;
            let text = match format {
                Format::Csv => report.to_csv(&l),
                Format::Text => report.summary(),
            };
            Ok(Outcome::flagged(text, !report.all_pass()))
        }
        LatticeCmd::Recipe { .. } => {
            let s = build_set_system(&l).map_err(err)?;
            let recipe = emit_measure_recipe(&l, &s);
            let json = serde_json::to_string_pretty(&recipe).map_err(|e| e.to_string())?;
            Ok(Outcome::ok(json + "\n"))
        }
    }
}

fn sigmas(args: &SigmaArgs) -> CliResult<Vec<BitString>> {
    if args.sigma.is_empty() {
        Ok(BitString::all_of_length(args.depth).collect())
    } else {
        args.sigma.iter().map(|s| load::bits(s)).collect()
    }
}

fn eval_lines(mu: &dyn MeasureOracle, args: &SigmaArgs) -> CliResult<String> {
    let mut out = String::new();
    for sigma in sigmas(args)? {
        let e = measure_eval(mu, &sigma, args.precision).map_err(|e| e.to_string())?;
        writeln!(out, "{}", e.report_line()).unwrap();
    }
    Ok(out)
}

fn measure(cmd: MeasureCmd) -> CliResult<Outcome> {
    match cmd {
        MeasureCmd::Eval { measure, args } => {
            let mu = load::measure(&measure, args.guard_bits)?;
            Ok(Outcome::ok(eval_lines(mu.as_ref(), &args)?))
        }
        MeasureCmd::Audit {
            measure,
            depth,
            precision,
            guard_bits,
        } => {
            let mu = load::measure(&measure, guard_bits)?;
            let report = check_additivity(mu.as_ref(), depth, precision).map_err(|e| e.to_string())?;
            Ok(Outcome::flagged(report.to_string(), !report.is_clean()))
        }
        MeasureCmd::Atoms {
            measure,
            depth,
            delta,
            precision,
            guard_bits,
        } => {
            let mu = load::measure(&measure, guard_bits)?;
            let delta = load::dyadic(&delta)?;
            let found = atom_candidates(mu.as_ref(), depth, &delta, precision).map_err(|e| e.to_string())?;
            let mut out = String::new();
            for (sigma, mass) in &found {
                writeln!(out, "{sigma}\t{mass}").unwrap();
            }
            let total: DyadicRational = found.iter().map(|(_, m)| m).sum();
            writeln!(out, "candidates\t{}\ttotal\t{total}", found.len()).unwrap();
            Ok(Outcome::ok(out))
        }
        MeasureCmd::Convex {
            first,
            second,
            alpha,
            args,
        } => {
            let mu = load::measure(&first, args.guard_bits)?;
            let nu = load::measure(&second, args.guard_bits)?;
            let mix = convex_sum(mu, nu, load::dyadic(&alpha)?).map_err(|e| e.to_string())?;
            let mix: SharedMeasure = Arc::new(mix);
            Ok(Outcome::ok(eval_lines(mix.as_ref(), &args)?))
        }
    }
}

fn functional(cmd: FunctionalCmd) -> CliResult<Outcome> {
    match cmd {
        FunctionalCmd::Apply { functional, input } => {
            let phi = load::functional(&functional)?;
            let out = tt_apply(phi.as_ref(), &load::bits(&input)?).map_err(|e| e.to_string())?;
            Ok(Outcome::ok(format!("{out}\n")))
        }
        FunctionalCmd::Induced {
            functional,
            sigma,
            mode,
            guard_bits,
        } => {
            let phi = load::functional(&functional)?;
            let mode = match mode {
                PreimageArg::Pruned => PreimageMode::Pruned,
                PreimageArg::Enumerate => PreimageMode::Enumerate,
            };
            let mut out = String::new();
            for s in &sigma {
                let s = load::bits(s)?;
                let v = induced_measure(phi.as_ref(), &s, mode, guard_bits).map_err(|e| e.to_string())?;
                writeln!(out, "{s}\t{v}").unwrap();
            }
            Ok(Outcome::ok(out))
        }
        FunctionalCmd::Verify { functional, depth } => {
            let phi = load::functional(&functional)?;
            let report = tt_verify(phi.as_ref(), depth);
            Ok(Outcome::flagged(report.to_string(), !report.is_clean()))
        }
    }
}

/// A schedule file, or `test:<spec>` for the test-capture predicate.
fn predicate(source: &str) -> CliResult<(Box<dyn ThetaPredicate>, Option<ScheduleMatch>)> {
    if let Some(spec) = source.strip_prefix("test:") {
        return Ok((Box::new(make_theta_test(load::test(spec)?)), None));
    }
    let sched = ScheduleMatch {
        sched: load::schedule(source)?,
    };
    Ok((Box::new(sched.clone()), Some(sched)))
}

fn tally(cmd: TallyCmd) -> CliResult<Outcome> {
    match cmd {
        TallyCmd::Simulate {
            source,
            input,
            fill,
            blocks,
            budget,
            mode,
        } => {
            let (pred, _) = predicate(&source)?;
            let x = load::pattern(&input)?;
            let out = match mode {
                TallyModeArg::Phi => tally_output(pred.as_ref(), &x, blocks, budget),
                TallyModeArg::Psi => {
                    let y = load::pattern(&fill)?;
                    tally_output_filled(pred.as_ref(), &x, &y, blocks, budget)
                }
            }
            .map_err(|e| e.to_string())?;
            Ok(Outcome::ok(format!("{out}\n")))
        }
        TallyCmd::Measure {
            schedule,
            mode,
            depth,
            guard_bits,
            components,
        } => {
            let sched = load::schedule(&schedule)?;
            let mode = match mode {
                TallyModeArg::Phi => TallyMode::Phi,
                TallyModeArg::Psi => TallyMode::Psi,
            };
            let m = tally_induced_measure(&sched, mode, guard_bits).map_err(|e| e.to_string())?;
            let text = if components {
                let mut out = String::new();
                for c in m.components() {
                    writeln!(out, "{c}").unwrap();
                }
                writeln!(out, "total\t{}", m.total_mass()).unwrap();
                out
            } else {
                m.atoms(depth).to_string()
            };
            Ok(Outcome::ok(text))
        }
        TallyCmd::Theta {
            source,
            input,
            blocks,
            budget,
        } => {
            let (pred, sched) = predicate(&source)?;
            let x = load::pattern(&input)?;
            let mut out = String::new();
            for n in 0..blocks {
                let v = theta_search(pred.as_ref(), &x, n, budget).map_err(|e| e.to_string())?;
                writeln!(out, "{n}\t{v}").unwrap();
            }
            if let Some(s) = sched {
                writeln!(out, "case\t{}", classify_input(&s.sched, &x)).unwrap();
            }
            Ok(Outcome::ok(out))
        }
    }
}

fn test(cmd: TestCmd) -> CliResult<Outcome> {
    match cmd {
        TestCmd::Bound {
            test,
            measure,
            depth,
            budget,
            precision,
            guard_bits,
        } => {
            let t = load::test(&test)?;
            let mu = load::measure(&measure, guard_bits)?;
            if t.kind() == TestKind::Generalized {
                let epsilon = DyadicRational::pow2_neg(depth as u32);
                let r = check_generalized(t.as_ref(), mu.as_ref(), depth, budget, &epsilon, precision)
                    .map_err(|e| e.to_string())?;
                let mut out = String::new();
                for (i, m) in r.masses.iter().enumerate() {
                    writeln!(out, "i={i}\ts={}\tmass={m}", r.stage).unwrap();
                }
                let below = r.below_from.map_or("never".to_string(), |i| i.to_string());
                writeln!(out, "epsilon\t{}\tnonincreasing\t{}\tbelow_from\t{below}", r.epsilon, r.nonincreasing)
                    .unwrap();
                return Ok(Outcome::flagged(out, !r.nonincreasing));
            }
            let audit = audit_bounds(t.as_ref(), mu.as_ref(), depth, budget, precision)
                .map_err(|e| e.to_string())?;
            Ok(Outcome::flagged(audit.to_string(), !audit.is_clean()))
        }
        TestCmd::Capture {
            test,
            input,
            depth,
            budget,
        } => {
            let t = load::test(&test)?;
            let x = load::pattern(&input)?;
            let mut out = String::new();
            for n in 0..depth {
                let v = capture_stage(t.as_ref(), &x, n, budget).map_err(|e| e.to_string())?;
                writeln!(out, "{n}\t{v}").unwrap();
            }
            Ok(Outcome::ok(out))
        }
    }
}
