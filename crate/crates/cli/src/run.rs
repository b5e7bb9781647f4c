//! Command execution. Every command renders its CSV artifacts in memory; the
//! caller writes them only once all of them succeeded.

use log::info;
use serde_json::json;

use sofi_crb::blink::{cumulant_ratio_curve, Pattern};
use sofi_crb::correlation::{correlation_field, dip_contrast, dip_profile, ideal_cumulant_image, probability_field};
use sofi_crb::export;
use sofi_crb::fisher::BoundFlag;
use sofi_crb::shot_noise::{shot_noise_envelope, ShotNoiseSettings};
use sofi_crb::sweep::{error_vs_scale, resolution_scan, ErrorBoundTable, ScanFlag};

use crate::config::{blink_model, Command, Plan};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// File-name form of a shape, e.g. `line-1d-3`.
fn slug(shape: &impl ToString) -> String {
    shape.to_string().replace(':', "-")
}

/// First-line echo of the resolved run.
pub fn header(command: Command, plan: &Plan, seed: u64) -> String {
    json!({ "command": command.name(), "seed": seed, "params": plan.params_json() }).to_string()
}

fn render(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn rescale(mut table: ErrorBoundTable, events: f64) -> ErrorBoundTable {
    for row in &mut table.rows {
        row.tr_inv_fisher /= events;
    }
    table
}

fn require_resolvable(table: &ErrorBoundTable) -> CliResult<()> {
    if table.rows.iter().all(|r| r.flag == BoundFlag::Unresolvable) {
        return Err(CliError::Numeric("every bound is unresolvable".into()));
    }
    Ok(())
}

pub fn execute(command: Command, plan: &Plan, seed: u64) -> CliResult<Vec<Artifact>> {
    let head = header(command, plan, seed);
    let comment = Some(head.as_str());
    let mut out = Vec::new();
    match plan {
        Plan::Field { params, scenario } => {
            let (config, grid) = scenario.setup(params.d_over_w)?;
            let name = slug(&scenario.shape);
            for &n in &params.orders {
                let field = correlation_field(&config, &grid, n)?;
                out.push(Artifact {
                    name: format!("field_{name}_n{n}.csv"),
                    bytes: render(|b| export::write_field(b, comment, &grid, &field.values))?,
                });
                if params.probability {
                    let pf = probability_field(&config, &grid, n)?;
                    out.push(Artifact {
                        name: format!("probability_{name}_n{n}.csv"),
                        bytes: render(|b| export::write_probability_field(b, comment, &grid, &pf))?,
                    });
                }
            }
        }
        Plan::ErrorVsScale { params, scenarios } => {
            let mut table = ErrorBoundTable::default();
            for sc in scenarios {
                info!("error-vs-scale: {}", sc.shape);
                let t = error_vs_scale(sc, &params.d_over_w, &params.orders, params.mode)?;
                table.rows.extend(rescale(t, params.events).rows);
            }
            require_resolvable(&table)?;
            out.push(Artifact {
                name: "error_vs_scale.csv".into(),
                bytes: render(|b| export::write_error_table(b, comment, &table, true))?,
            });
        }
        Plan::ErrorVsOrder { params, scenarios } => {
            let orders: Vec<usize> = (1..=params.n_max).collect();
            let mut any_ok = false;
            for sc in scenarios {
                info!("error-vs-order: {}", sc.shape);
                let t = rescale(error_vs_scale(sc, &params.d_over_w, &orders, params.mode)?, params.events);
                any_ok |= t.rows.iter().any(|r| r.flag == BoundFlag::Ok);
                out.push(Artifact {
                    name: format!("error_vs_order_{}.csv", slug(&sc.shape)),
                    bytes: render(|b| export::write_error_table(b, comment, &t, true))?,
                });
            }
            if !any_ok {
                return Err(CliError::Numeric("every bound is unresolvable".into()));
            }
        }
        Plan::ResolutionScan { params, scenarios, scan } => {
            let mut table = sofi_crb::sweep::ResolutionTable::default();
            for sc in scenarios {
                info!("resolution-scan: {}", sc.shape);
                let t = resolution_scan(sc, &params.thresholds, params.n_max, params.mode, scan)?;
                table.rows.extend(t.rows);
            }
            if table.rows.iter().all(|r| r.flag == ScanFlag::NonMonotone) {
                return Err(CliError::Numeric("no bracket was monotone".into()));
            }
            out.push(Artifact {
                name: "resolution_scan.csv".into(),
                bytes: render(|b| export::write_resolution_table(b, comment, &table))?,
            });
        }
        Plan::DipContrast { params, scenario } => {
            let shape = scenario.shape.to_string();
            let mut rows = Vec::new();
            let mut profiles = Vec::new();
            for &d in &params.d_over_w {
                let config = scenario.config(d)?;
                let step = params.profile_step * scenario.psf.width();
                for n in 1..=params.n_max {
                    rows.push((d, n, dip_contrast(&config, n, step)?));
                    profiles.push((d, n, dip_profile(&config, n, step, 2.0 * scenario.psf.width())?));
                }
            }
            out.push(Artifact {
                name: "dip_contrast.csv".into(),
                bytes: render(|b| export::write_dip_contrast(b, comment, &shape, &rows))?,
            });
            out.push(Artifact {
                name: "dip_profile.csv".into(),
                bytes: render(|b| export::write_dip_profile(b, comment, &profiles))?,
            });
        }
        Plan::BlinkRatio { params } => {
            let patterns: Vec<Pattern> = params
                .patterns
                .iter()
                .map(|p| p.parse())
                .collect::<Result<_, _>>()?;
            let mut rows = Vec::new();
            for &a in &params.alpha_pl {
                info!("blink-ratio: alpha_pl = {a}");
                let model = blink_model(params, a);
                rows.extend(cumulant_ratio_curve(
                    &model,
                    &patterns,
                    &params.t_over_tau0,
                    params.n_realizations,
                    seed,
                )?);
            }
            out.push(Artifact {
                name: "blink_ratio.csv".into(),
                bytes: render(|b| export::write_blink_ratio(b, comment, &rows))?,
            });
        }
        Plan::ShotNoise { params, scenario } => {
            let (config, grid) = scenario.setup(params.d_over_w)?;
            let settings = ShotNoiseSettings {
                mean_peak_counts: params.mean_peak_counts,
                n_frames: params.n_frames,
                n_realizations: params.n_realizations,
            };
            let envelopes = shot_noise_envelope(&config, &grid, &params.orders, &settings, seed)?;
            out.push(Artifact {
                name: "shot_noise.csv".into(),
                bytes: render(|b| export::write_shot_noise(b, comment, &grid, &envelopes))?,
            });
        }
        Plan::CumulantImage { params, scenario } => {
            let (config, grid) = scenario.setup(params.d_over_w)?;
            let name = slug(&scenario.shape);
            for &n in &params.orders {
                let image = ideal_cumulant_image(&config, &grid, n)?;
                out.push(Artifact {
                    name: format!("cumulant_image_{name}_n{n}.csv"),
                    bytes: render(|b| export::write_field(b, comment, &grid, &image.values))?,
                });
            }
        }
    }
    Ok(out)
}
