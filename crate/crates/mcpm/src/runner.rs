//! Config-driven pipelines shared by the command line tool and the C
//! bindings: each function turns a parsed [`RunConfig`](crate::config::RunConfig)
//! into result rows, and [`csv_for_command`] maps a command token straight
//! to CSV text. Keeping these here means every front end produces
//! byte-identical tables for the same configuration.

use crate::analysis::analytic_ber;
use crate::channel::channel_coefficients;
use crate::config::RunConfig;
use crate::modulation::Scheme;
use crate::optimizer::{exhaustive_design_search, theoretical_design, DesignEvaluator};
use crate::report::{
    sweep_rows, to_csv_string, AnalyticRow, CoeffRow, DesignRow, ResultRow,
};
use crate::simulator::{apply_axis, run_ber, sweep, DesignPolicy, Experiment, McpmDetector};
use crate::{Error, Result};

/// Channel coefficient table over the configured grid.
pub fn coeffs_rows(cfg: &RunConfig) -> Result<Vec<CoeffRow>> {
    let grid = cfg.coeff_grid()?;
    let params = cfg.channel_params()?;
    let h = channel_coefficients(&params, &grid)?;
    Ok(h.taps()
        .iter()
        .enumerate()
        .map(|(i, &h_n)| CoeffRow { n: i + 1, h_n })
        .collect())
}

/// Design report: the theoretical path for every MCPM scheme, plus the
/// exhaustive search when the config selects that policy.
pub fn design_rows(cfg: &RunConfig) -> Result<Vec<DesignRow>> {
    let exp = cfg.experiment()?;
    let mut rows: Vec<DesignRow> = Vec::new();
    for scheme in exp.schemes.iter().filter(|s| s.scheme == Scheme::Mcpm) {
        let (_grid, h) = exp.scheme_channel(scheme)?;
        let mut points = vec![theoretical_design(scheme, &h, exp.ls)?];
        if let DesignPolicy::Exhaustive { symbols } = exp.design {
            let ev = DesignEvaluator::MonteCarlo { seed: exp.seed, symbols };
            points.push(exhaustive_design_search(scheme, &h, exp.ls, &ev)?);
        }
        for p in points {
            // The analytic prediction is advisory; out-of-guard regimes
            // leave the cell empty rather than failing the report.
            let predicted = p.predicted_ber.or_else(|| {
                scheme
                    .with_alpha(p.alpha)
                    .and_then(|c| analytic_ber(&c, &h, p.gamma, exp.ls))
                    .ok()
            });
            rows.push(DesignRow {
                scheme: scheme.token(),
                k: scheme.k,
                m: scheme.m_per_bit,
                tb_s: scheme.tb_s,
                method: p.method.token().to_string(),
                alpha: p.alpha,
                gamma: p.gamma,
                predicted_ber: predicted,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::config("the design report needs at least one MCPM scheme"));
    }
    Ok(rows)
}

/// One simulated BER row per scheme.
pub fn simulate_rows(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    let exp = cfg.experiment()?;
    let runs = run_ber(&exp)?;
    Ok(runs.iter().map(|r| ResultRow::from_run(r, exp.tau_s, exp.seed)).collect())
}

/// BER rows over the configured sweep, one per (value, scheme).
pub fn sweep_result_rows(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    let exp = cfg.experiment()?;
    let (axis, values) = cfg.sweep_axis_values()?;
    let points = sweep(axis, &values, &exp)?;
    Ok(sweep_rows(&points, axis, exp.tau_s, exp.seed))
}

/// Simulated rows with the analytic prediction appended. The analysis
/// models the two-phase detector, so the config must select it, and every
/// scheme must be MCPM. With a `[sweep]` section the comparison runs at
/// every sweep value; without one it runs the experiment as configured.
pub fn analytic_rows(cfg: &RunConfig) -> Result<Vec<AnalyticRow>> {
    let base = cfg.experiment()?;
    if base.mcpm_detector != McpmDetector::Tpcd {
        return Err(Error::config(
            "the analytic comparison models the two-phase detector; set detector.mcpm = \"tpcd\"",
        ));
    }
    if base.schemes.iter().any(|s| s.scheme != Scheme::Mcpm) {
        return Err(Error::config("the analytic comparison covers MCPM schemes only"));
    }
    let points: Vec<Experiment> = if cfg.sweep.is_some() {
        let (axis, values) = cfg.sweep_axis_values()?;
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("sweep values must be strictly ascending"));
        }
        values
            .iter()
            .map(|&v| apply_axis(&base, axis, v))
            .collect::<Result<_>>()?
    } else {
        vec![base]
    };
    let mut rows = Vec::new();
    for exp in &points {
        for run in &run_ber(exp)? {
            let (_grid, h) = exp.scheme_channel(&run.cfg)?;
            let gamma = run
                .gamma
                .ok_or_else(|| Error::invalid("analytic comparison needs a threshold"))?;
            let prediction = analytic_ber(&run.cfg, &h, gamma, exp.ls)?;
            rows.push(AnalyticRow::from_result(
                ResultRow::from_run(run, exp.tau_s, exp.seed),
                prediction,
            ));
        }
    }
    Ok(rows)
}

/// Run one command token against a config and return its CSV text.
/// Tokens mirror the CLI subcommands.
pub fn csv_for_command(cfg: &RunConfig, command: &str) -> Result<String> {
    match command {
        "coeffs" => to_csv_string(&coeffs_rows(cfg)?),
        "design" => to_csv_string(&design_rows(cfg)?),
        "simulate" => to_csv_string(&simulate_rows(cfg)?),
        "sweep" => to_csv_string(&sweep_result_rows(cfg)?),
        "analytic" => to_csv_string(&analytic_rows(cfg)?),
        other => Err(Error::config(format!("unknown command '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [channel]
        r0_um = 10.0
        rr_um = 5.0
        d_um2_s = 79.4
        [timing]
        tb_s = 0.3
        [budget]
        m_per_bit = 40.0
        [[schemes]]
        token = "2-mcpm"
        [detector]
        mcpm = "tpcd"
        ls = 2
        [experiment]
        bit_budget = 2048
        min_error_events = 10
        seed = 3
        [sweep]
        axis = "m"
        values = [30.0, 40.0]
        [grid]
        ts_s = 0.3
        l = 4
    "#;

    #[test]
    fn every_command_produces_parseable_csv() {
        let cfg = RunConfig::from_str(BASE).unwrap();
        for command in ["coeffs", "design", "simulate", "sweep", "analytic"] {
            let text = csv_for_command(&cfg, command).unwrap();
            assert!(text.ends_with('\n'), "{command}");
            assert!(text.lines().count() >= 2, "{command}");
        }
        assert!(csv_for_command(&cfg, "render").is_err());
    }

    #[test]
    fn commands_are_deterministic() {
        let cfg = RunConfig::from_str(BASE).unwrap();
        assert_eq!(
            csv_for_command(&cfg, "sweep").unwrap(),
            csv_for_command(&cfg, "sweep").unwrap()
        );
        let rows: Vec<ResultRow> =
            crate::report::from_csv_string(&csv_for_command(&cfg, "simulate").unwrap()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].scheme, "2-mcpm");
        assert_eq!(rows[0].seed, 3);
    }

    #[test]
    fn analytic_report_follows_the_sweep() {
        let cfg = RunConfig::from_str(BASE).unwrap();
        let rows = analytic_rows(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].m, 30.0);
        assert_eq!(rows[1].m, 40.0);
        assert!(rows.iter().all(|r| r.analytic_ber > 0.0));
        // Without a sweep the report covers the configured experiment once.
        let base_no_sweep = BASE
            .replace("[sweep]", "")
            .replace("axis = \"m\"", "")
            .replace("values = [30.0, 40.0]", "");
        let cfg = RunConfig::from_str(&base_no_sweep).unwrap();
        assert_eq!(analytic_rows(&cfg).unwrap().len(), 1);
    }

    #[test]
    fn design_report_requires_mcpm() {
        let cfg =
            RunConfig::from_str(&BASE.replace("token = \"2-mcpm\"", "token = \"bcsk\"")).unwrap();
        assert!(matches!(design_rows(&cfg), Err(Error::Config(_))));
        assert!(matches!(analytic_rows(&cfg), Err(Error::Config(_))));
    }
}
