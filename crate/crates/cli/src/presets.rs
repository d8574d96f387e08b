//! Shipped scenarios, stored as configuration text.

use crate::config::Loaded;
use crate::error::CliError;

pub struct Preset {
    pub name: &'static str,
    pub figure: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2_envbench",
        figure: "2",
        description: "qubit in |up> coupled to M random modes (RWA sector); excitation vs time for M = 0, 1, 2, 4, 8",
        source: r#"kind = "envbench"
output = "fig2_envbench"

[grid]
t0 = 0.0
t1 = 40000.0
dt = 0.05
sample_every = 200

[envbench]
modes = [0, 1, 2, 4, 8]
omega = 1.0
gbar1 = 0.001
rel_sigma = 0.05
seed = 1
rwa = true
"#,
    },
    Preset {
        name: "fig5_cavity_unravelings",
        figure: "5",
        description: "damped cavity from |10>, 100 counting and 100 homodyne trajectories with master-equation reference",
        source: r#"kind = "trajectories"
output = "fig5_cavity_unravelings"
observables = ["n"]

[model]
dims = [31]
hamiltonian = "n"
jumps = [{ rate = 1.0, op = "a" }]
initial = [10]

[grid]
t0 = 0.0
t1 = 5.0
dt = 0.001
sample_every = 10

[trajectories]
schemes = ["counting", "homodyne"]
n = 100
seed = 5
master_reference = true
"#,
    },
    Preset {
        name: "fig6_state_transfer",
        figure: "6",
        description: "two qubits from |e,g> with equal local and collective decay; counting trajectories and the no-jump branch",
        source: r#"kind = "trajectories"
output = "fig6_state_transfer"
observables = ["sp1*sm1", "sp2*sm2"]

[model]
dims = [2, 2]
hamiltonian = "0.5*sz1 + 0.5*sz2"
jumps = [
    { rate = 0.1, op = "sm1" },
    { rate = 0.1, op = "sm2" },
    { rate = 1.0, op = "0.7071067811865476*sm1 + 0.7071067811865476*sm2" },
]
initial = [0, 1]

[grid]
t0 = 0.0
t1 = 10.0
dt = 0.001
sample_every = 10

[trajectories]
schemes = ["counting", "no_jump"]
n = 10
seed = 3
"#,
    },
    Preset {
        name: "fig3_qec_ratio",
        figure: "3",
        description: "three-qubit bit-flip code: logical error rate against the unencoded rate as a function of the period",
        source: r#"kind = "qec"
output = "fig3_qec_ratio"

[qec]
gamma = 1.0
taus = [0.005, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2]
"#,
    },
    Preset {
        name: "zeno_appendixA2",
        figure: "none (repeated-interaction model)",
        description: "cavity damped by repeated ancilla interactions and measurements; fitted rate against g^2 tau",
        source: r#"kind = "zeno"
output = "zeno_appendixA2"

[zeno]
g = 1.0
cutoff = 1
taus = [0.0125, 0.025, 0.05]
n_cycles = 2000
"#,
    },
];

pub fn find(name: &str) -> Result<&'static Preset, CliError> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        CliError::schema(format!("unknown preset {name:?}; available: {}", names.join(", ")))
    })
}

/// Value of a `--set` override: TOML syntax if it parses, a string otherwise.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `key=value` overrides (dotted keys address tables) and parses.
pub fn resolve(preset: &Preset, overrides: &[String]) -> Result<Loaded, CliError> {
    let mut table: toml::Table = toml::from_str(preset.source).expect("presets are valid TOML");
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| CliError::schema(format!("override {o:?} is not of the form key=value")))?;
        let path: Vec<&str> = key.trim().split('.').collect();
        let mut node = &mut table;
        for part in &path[..path.len() - 1] {
            node = node
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| CliError::schema(format!("override {key:?}: {part:?} is not a table")))?;
        }
        node.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    }
    let text = toml::to_string(&table).map_err(|e| CliError::schema(e.to_string()))?;
    Loaded::parse(text)
}

/// `key = value` lines of a preset's defaults, tables flattened with dots.
pub fn defaults(preset: &Preset) -> Vec<String> {
    fn walk(prefix: &str, t: &toml::Table, out: &mut Vec<String>) {
        for (k, v) in t {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match v {
                toml::Value::Table(inner) => walk(&key, inner, out),
                _ => out.push(format!("{key} = {v}")),
            }
        }
    }
    let table: toml::Table = toml::from_str(preset.source).expect("presets are valid TOML");
    let mut out = Vec::new();
    walk("", &table, &mut out);
    out
}
