mod commands;
mod load;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "trivmeas", version, about = "Exact measures, tally functionals, staged tests and lattice set systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite lattices and their set systems
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Measure oracles
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Truth-table functionals
    #[command(subcommand)]
    Functional(FunctionalCmd),
    /// Tally functionals driven by mutation schedules
    #[command(subcommand)]
    Tally(TallyCmd),
    /// Staged randomness tests
    #[command(subcommand)]
    Test(TestCmd),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PreimageArg {
    Pruned,
    Enumerate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TallyModeArg {
    Phi,
    Psi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReadingArg {
    AllBasics,
    LevelTwo,
}

#[derive(Subcommand)]
enum LatticeCmd {
    /// Validate the lattice and test distributivity
    Check { file: String },
    /// Level of every element
    Levels { file: String },
    /// The set system, one `element: {terms}` line per element
    Sets { file: String },
    /// Audit the set system against the lattice order, meets and joins
    Iso { file: String },
    /// Enumerate LR profiles and their verdicts
    Profiles {
        file: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long, value_enum, default_value = "all-basics")]
        reading: ReadingArg,
        #[arg(long, default_value_t = 20)]
        max_basics: usize,
    },
    /// JSON recipe for the uniform mixture over the bottom set
    Recipe { file: String },
}

#[derive(Args)]
struct SigmaArgs {
    /// Cylinders to evaluate (repeatable); defaults to all strings of length --depth
    #[arg(long)]
    sigma: Vec<String>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 20)]
    precision: u32,
    #[arg(long, default_value_t = 24)]
    guard_bits: usize,
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Evaluate cylinders
    Eval {
        measure: String,
        #[command(flatten)]
        args: SigmaArgs,
    },
    /// Additivity audit up to --depth
    Audit {
        measure: String,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 20)]
        precision: u32,
        #[arg(long, default_value_t = 24)]
        guard_bits: usize,
    },
    /// Cylinders of length --depth with mass at least --delta
    Atoms {
        measure: String,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value = "1/8")]
        delta: String,
        #[arg(long, default_value_t = 40)]
        precision: u32,
        #[arg(long, default_value_t = 24)]
        guard_bits: usize,
    },
    /// Evaluate alpha·first + (1-alpha)·second
    Convex {
        first: String,
        second: String,
        #[arg(long)]
        alpha: String,
        #[command(flatten)]
        args: SigmaArgs,
    },
}

#[derive(Subcommand)]
enum FunctionalCmd {
    /// Output determined by an input prefix
    Apply {
        functional: String,
        #[arg(long)]
        input: String,
    },
    /// Induced measure of cylinders
    Induced {
        functional: String,
        #[arg(long)]
        sigma: Vec<String>,
        #[arg(long, value_enum, default_value = "pruned")]
        mode: PreimageArg,
        #[arg(long, default_value_t = 24)]
        guard_bits: usize,
    },
    /// Audit monotonicity and the use bound up to --depth
    Verify {
        functional: String,
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
}

#[derive(Subcommand)]
enum TallyCmd {
    /// Render the first blocks for an input
    Simulate {
        /// Schedule file, or `test:<name-or-file>` for a test-capture predicate
        source: String,
        #[arg(long)]
        input: String,
        /// Fill sequence Y for psi mode
        #[arg(long, default_value = "+1")]
        fill: String,
        #[arg(long, default_value_t = 8)]
        blocks: usize,
        #[arg(long, default_value_t = 64)]
        budget: usize,
        #[arg(long, value_enum, default_value = "phi")]
        mode: TallyModeArg,
    },
    /// Atom decomposition of the induced measure
    Measure {
        schedule: String,
        #[arg(long, value_enum, default_value = "phi")]
        mode: TallyModeArg,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 24)]
        guard_bits: usize,
        /// Print the closed-form components instead of atoms
        #[arg(long)]
        components: bool,
    },
    /// θ(X, n) for n below --blocks, and the input's case
    Theta {
        source: String,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 8)]
        blocks: usize,
        #[arg(long, default_value_t = 64)]
        budget: usize,
    },
}

#[derive(Subcommand)]
enum TestCmd {
    /// Audit the measure bounds over a grid of components and stages
    Bound {
        test: String,
        #[arg(long, default_value = "lebesgue")]
        measure: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 4)]
        budget: usize,
        #[arg(long, default_value_t = 20)]
        precision: u32,
        #[arg(long, default_value_t = 24)]
        guard_bits: usize,
    },
    /// Capture stage of an input for every component below --depth
    Capture {
        test: String,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 64)]
        budget: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            if outcome.violation {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
