//! Machine-readable description of the command suite.

use serde::Serialize;
use serde_json::Value;

use crate::config::Command;

#[derive(Debug, Clone, Serialize)]
pub struct OutputSchema {
    /// File name; `{shape}` and `{n}` are placeholders.
    pub file: &'static str,
    pub columns: Vec<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommandEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub figures: Vec<&'static str>,
    pub outputs: Vec<OutputSchema>,
    pub defaults: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub usage: &'static str,
    pub exit_codes: Value,
    pub commands: Vec<CommandEntry>,
}

fn schema(file: &'static str, columns: &[&'static str]) -> OutputSchema {
    OutputSchema {
        file,
        columns: columns.to_vec(),
    }
}

fn entry(command: Command) -> CommandEntry {
    let (summary, figures, outputs) = match command {
        Command::Field => (
            "Correlation field and normalized probability field with gradients on the detection grid",
            vec![],
            vec![
                schema("field_{shape}_n{n}.csv", &["x", "[y]", "value"]),
                schema("probability_{shape}_n{n}.csv", &["x", "[y]", "p", "grad_<param>..."]),
            ],
        ),
        Command::ErrorVsScale => (
            "Cramer-Rao bound versus source separation for a set of correlation orders",
            vec!["fig5", "figB6"],
            vec![schema(
                "error_vs_scale.csv",
                &["shape", "dims", "mode", "n", "d_over_w", "tr_inv_fisher", "flag"],
            )],
        ),
        Command::ErrorVsOrder => (
            "Cramer-Rao bound versus correlation order, one file per shape",
            vec!["fig6", "figB7", "figB8", "figB9", "figB10"],
            vec![schema(
                "error_vs_order_{shape}.csv",
                &["shape", "dims", "mode", "n", "d_over_w", "tr_inv_fisher", "flag"],
            )],
        ),
        Command::ResolutionScan => (
            "Minimal separation meeting an error budget, per cumulant order",
            vec!["fig7"],
            vec![schema(
                "resolution_scan.csv",
                &["shape", "threshold", "n", "min_d_over_w", "flag"],
            )],
        ),
        Command::DipContrast => (
            "Midpoint dip of the correlation profile between two sources",
            vec!["fig3"],
            vec![
                schema("dip_contrast.csv", &["shape", "d_over_w", "n", "contrast"]),
                schema("dip_profile.csv", &["d_over_w", "n", "offset", "value"]),
            ],
        ),
        Command::BlinkRatio => (
            "Normalized spread of joint cumulant estimates of power-law blinking versus acquisition time",
            vec!["fig8"],
            vec![schema(
                "blink_ratio.csv",
                &["pattern", "alpha_pl", "T_over_tau0", "u", "mean", "var", "flag"],
            )],
        ),
        Command::ShotNoise => (
            "Monte-Carlo mean and spread of single-pixel cumulants under a fixed photon budget",
            vec!["fig2"],
            vec![schema("shot_noise.csv", &["x", "[y]", "mean", "std", "order"])],
        ),
        Command::CumulantImage => (
            "Noise-free cumulant image of independent blinking sources",
            vec!["fig2"],
            vec![schema("cumulant_image_{shape}_n{n}.csv", &["x", "[y]", "value"])],
        ),
    };
    CommandEntry {
        name: command.name(),
        summary,
        figures,
        outputs,
        defaults: command.defaults(),
    }
}

pub fn manifest() -> Manifest {
    Manifest {
        version: env!("CARGO_PKG_VERSION"),
        usage: "sofi-crb <command> --config <file.json> [--out DIR] [--seed U64] [--workers K]",
        exit_codes: serde_json::json!({ "ok": 0, "config": 2, "numeric": 3, "io": 4 }),
        commands: Command::ALL.iter().map(|c| entry(*c)).collect(),
    }
}
