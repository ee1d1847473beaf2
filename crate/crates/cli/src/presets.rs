//! Named experiment configurations.

use toml::Table;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub long_running: bool,
    toml: &'static str,
}

impl Preset {
    pub fn table(&self) -> Table {
        self.toml.parse().expect("built-in presets are valid TOML")
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "table1-desk",
        summary: "completion n=300 r=10 p=0.3, DYS/DRS/SVP/SVT, 5 seeds",
        long_running: false,
        toml: r#"
task = "matcomp_synth"
methods = ["dys", "drs", "svp", "svt"]
trials = 5
[matcomp]
n = [300]
r = [10]
p = [0.3]
lambda = 1.5e-6
"#,
    },
    Preset {
        name: "table1-full",
        summary: "completion p=0.08, n up to 12000, ranks 10 and 30",
        long_running: true,
        toml: r#"
task = "matcomp_synth"
methods = ["dys", "drs", "svp", "svt"]
trials = 5
long_running = true
[matcomp]
n = [3000, 5000, 8000, 10000, 12000]
r = [10, 30]
p = [0.08]
lambda = 1.5e-6
"#,
    },
    Preset {
        name: "table2-full",
        summary: "completion p=0.05, n up to 12000, ranks 10 and 30",
        long_running: true,
        toml: r#"
task = "matcomp_synth"
methods = ["dys", "drs", "svp", "svt"]
trials = 5
long_running = true
[matcomp]
n = [3000, 5000, 8000, 10000, 12000]
r = [10, 30]
p = [0.05]
lambda = 1.5e-6
"#,
    },
    Preset {
        name: "ratings",
        summary: "ratings-file completion, ranks 5..30, SVP/DRS/DYS (needs --ratings)",
        long_running: true,
        toml: r#"
task = "matcomp_ratings"
methods = ["svp", "drs", "dys"]
trials = 1
long_running = true
[matcomp]
r = [5, 10, 15, 20, 25, 30]
lambda = 1e-3
test_fraction = 0.2
[solver]
gamma_k = 100.0
"#,
    },
    Preset {
        name: "cs-noiseless-desk",
        summary: "DCT sensing m=100 n=1500 s=5 F=10, DYS/ADMM/DCA, 10 seeds",
        long_running: false,
        toml: r#"
task = "cs_recovery"
methods = ["dys", "admm", "dca"]
trials = 10
[cs]
m = [100]
n = 1500
s = [5]
refinement = 10
sigma = [0.0]
"#,
    },
    Preset {
        name: "cs-noise-desk",
        summary: "DCT sensing with sigma=0.01, DYS vs DCA, 10 seeds",
        long_running: false,
        toml: r#"
task = "cs_noise"
methods = ["dys", "dca"]
trials = 10
[cs]
m = [100]
n = 1500
s = [5]
refinement = 10
sigma = [0.01]
"#,
    },
    Preset {
        name: "cs-sweep-desk",
        summary: "success rate over s in {5,9,15,17,20} at n=1500, 10 seeds",
        long_running: true,
        toml: r#"
task = "cs_recovery"
methods = ["dys", "admm", "dca"]
trials = 10
long_running = true
[cs]
m = [100]
n = 1500
s = [5, 9, 15, 17, 20]
refinement = 10
sigma = [0.0]
"#,
    },
    Preset {
        name: "cs-full",
        summary: "phase diagram m in {80..200}, n=2000, 100 trials",
        long_running: true,
        toml: r#"
task = "cs_recovery"
methods = ["dys", "admm", "dca"]
trials = 100
long_running = true
[cs]
m = [80, 100, 120, 150, 200]
n = 2000
s = [5, 9, 15, 17, 20]
refinement = 10
sigma = [0.0]
"#,
    },
    Preset {
        name: "gamma",
        summary: "step-size report for L=1, l=0, beta=1",
        long_running: false,
        toml: r#"
task = "diagnose"
[diagnose]
lipschitz_f = 1.0
weak_convexity = 0.0
beta = 1.0
"#,
    },
];

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| CliError::UnknownPreset(name.to_owned()))
}
