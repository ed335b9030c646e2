//! Text renderings of simulation results for the command line.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::campaign::CampaignMetrics;
use super::frontier::FrontierRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    /// One JSON object per line.
    Records,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "records" => Ok(OutputFormat::Records),
            other => Err(format!("unknown format {other:?}, expected table, csv or records")),
        }
    }
}

fn json_lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

pub fn render_frontier(rows: &[FrontierRow], format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Records => return json_lines(rows),
        OutputFormat::Csv => {
            out.push_str("n,p_guess,expected_mislabeled_per_1000,trial_time_ms,throughput_trials_per_min\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.n, r.p_guess, r.expected_mislabeled_per_1000, r.trial_time_ms, r.throughput_trials_per_min
                );
            }
        }
        OutputFormat::Table => {
            let _ = writeln!(out, "{:>3}  {:>12}  {:>16}  {:>13}  {:>14}", "N", "P_guess", "mislabeled/1000", "trial_ms", "trials/min");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:>3}  {:>12}  {:>16}  {:>13}  {:>14.3}",
                    r.n, r.p_guess, r.expected_mislabeled_per_1000, r.trial_time_ms, r.throughput_trials_per_min
                );
            }
        }
    }
    out
}

pub fn render_metrics(m: &CampaignMetrics, format: OutputFormat) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Records => return json_lines([m]),
        OutputFormat::Csv => {
            out.push_str("scope,name,trials,accepted,rate,ci95_low,ci95_high,expected\n");
            let _ = writeln!(
                out,
                "campaign,seed={},{},{},{},{},{},",
                m.rng_seed, m.trials_total, m.accepted_count, m.success_rate, m.success_ci95.0, m.success_ci95.1
            );
            for pm in &m.per_model {
                let _ = writeln!(
                    out,
                    "model,{}#{},{},{},{},{},{},{}",
                    pm.kind.as_str(),
                    pm.component,
                    pm.trials,
                    pm.accepted,
                    pm.acceptance_rate,
                    pm.acceptance_ci95.0,
                    pm.acceptance_ci95.1,
                    pm.expected_acceptance
                );
            }
            for c in &m.per_condition {
                let _ = writeln!(
                    out,
                    "condition,{}@{},{},{},{},,,",
                    c.condition, c.opacity, c.trials, c.accepted, c.success_rate
                );
            }
            let _ = writeln!(out, "label_noise,accepted_without_foveation,,,{},,,{}", m.label_noise_rate, m.label_noise_closed_form);
        }
        OutputFormat::Table => {
            let _ = writeln!(
                out,
                "# seed={} trials={} N={} alphabet={}",
                m.rng_seed, m.trials_total, m.code_length, m.alphabet_size
            );
            let _ = writeln!(
                out,
                "success rate      {:.6e}  ({} / {}, 95% CI {:.4e}..{:.4e})",
                m.success_rate, m.accepted_count, m.trials_total, m.success_ci95.0, m.success_ci95.1
            );
            let _ = writeln!(out, "label noise       {:.6e}  (closed form {:.6e})", m.label_noise_rate, m.label_noise_closed_form);
            let _ = writeln!(out, "trial time        {} ms  ({:.3} trials/min)", m.trial_time_ms, m.throughput_trials_per_min);
            out.push('\n');
            let _ = writeln!(out, "{:<20} {:>7} {:>12} {:>10} {:>13} {:>13}", "model", "weight", "trials", "accepted", "rate", "expected");
            for pm in &m.per_model {
                let _ = writeln!(
                    out,
                    "{:<20} {:>7} {:>12} {:>10} {:>13.6e} {:>13.6e}",
                    format!("{}#{}", pm.kind.as_str(), pm.component),
                    pm.weight,
                    pm.trials,
                    pm.accepted,
                    pm.acceptance_rate,
                    pm.expected_acceptance
                );
            }
            out.push('\n');
            let _ = writeln!(out, "{:<20} {:>7} {:>12} {:>10} {:>13}", "condition", "opacity", "trials", "accepted", "rate");
            for c in &m.per_condition {
                let _ = writeln!(
                    out,
                    "{:<20} {:>7} {:>12} {:>10} {:>13.6}",
                    c.condition, c.opacity, c.trials, c.accepted, c.success_rate
                );
            }
            out.push('\n');
            out.push_str(&render_frontier(&m.frontier_rows, OutputFormat::Table));
        }
    }
    out
}
