//! Rate analysis of the four dynamic coding schemes over a range series:
//!
//! * instantaneous upper bound `r_opt(t)` (re-code every snapshot),
//! * `r_static(tau)` (one code valid for every configuration seen so far,
//!   paying for it with a field that grows with tau),
//! * `r_intersection(tau1, tau2)` (code once on the links that survive the
//!   whole window),
//! * `r_interval(tau, T)` (re-code every sub-interval T, discounting the
//!   airtime spent re-distributing code parameters).
//!
//! On top of the series sit the stability/periodicity measures
//! (`tau_stable`, `t_period`, `T_opt`) and the criteria report whose maxRa
//! threshold picks interval vs intersection coding without running the
//! exhaustive sweep.
//!
//! Rates are in symbols/s: (channels x unit_bps bits/s) / (m bits per
//! symbol).

use std::io::Write;

use rayon::prelude::*;

use crate::constellation::RangeSeries;
use crate::graph::{max_flow, MultiGraph};
use crate::linkbudget::{capacity_graph, quantize, LinkParams};
use crate::{Error, Result};

/// A full dynamic-network evaluation problem.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub series: RangeSeries,
    pub params: LinkParams,
    pub source: usize,
    pub sinks: Vec<usize>,
    pub field_m: u32,
    pub unit_bps: f64,
}

/// Quantized multigraph per snapshot.
#[derive(Debug, Clone)]
pub struct Snapshots {
    dt_s: f64,
    graphs: Vec<MultiGraph>,
}

impl Snapshots {
    pub fn new(dt_s: f64, graphs: Vec<MultiGraph>) -> Self {
        Snapshots { dt_s, graphs }
    }

    /// Builds every snapshot's capacity graph and quantizes it; snapshots
    /// are independent and run in parallel.
    pub fn from_scenario(sc: &Scenario) -> Result<Snapshots> {
        sc.params.validate()?;
        if sc.unit_bps <= 0.0 {
            return Err(Error::InvalidInput("unit_bps must be positive".into()));
        }
        let graphs: Vec<MultiGraph> = (0..sc.series.num_steps())
            .into_par_iter()
            .map(|k| quantize(&capacity_graph(&sc.series.snapshot(k), &sc.params), sc.unit_bps))
            .collect();
        Ok(Snapshots { dt_s: sc.series.dt_s(), graphs })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn graph(&self, step: usize) -> &MultiGraph {
        &self.graphs[step]
    }

    /// Edgewise minimum over snapshot indices lo..=hi.
    fn window_intersection(&self, lo: usize, hi: usize) -> MultiGraph {
        let mut g = self.graphs[lo].clone();
        for k in (lo + 1)..=hi {
            g.intersect_in_place(&self.graphs[k]);
        }
        g
    }
}

/// Settings shared by every rate computation of one analysis.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub source: usize,
    pub sinks: Vec<usize>,
    pub field_m: u32,
    pub unit_bps: f64,
    /// Rate used to re-distribute code parameters (one channel).
    pub dist_rate_bps: f64,
    /// maxRa threshold for the interval-vs-intersection recommendation.
    pub threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            source: 0,
            sinks: Vec::new(),
            field_m: 8,
            unit_bps: 6400.0,
            dist_rate_bps: 6400.0,
            threshold: 2.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Opt,
    Static,
    Intersection,
    Interval,
}

/// A rate time series on the snapshot grid.
#[derive(Debug, Clone)]
pub struct RateSeries {
    pub kind: RateKind,
    pub dt_s: f64,
    pub values: Vec<f64>,
}

impl RateSeries {
    pub fn times_s(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.dt_s)
    }
}

/// Stabilization time of the intersection rate.
#[derive(Debug, Clone, Copy)]
pub struct TauStable {
    pub minutes: f64,
    /// True when the raw value exceeded the 2 x t_period cap (or the cap
    /// could not be derived) and was clamped.
    pub capped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recommendation {
    Interval,
    Intersection,
}

impl std::fmt::Display for Recommendation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Recommendation::Interval => write!(f, "interval"),
            Recommendation::Intersection => write!(f, "intersection"),
        }
    }
}

/// The topology criteria and the scheme recommendation.
#[derive(Debug, Clone)]
pub struct CriteriaReport {
    pub papr: f64,
    pub max_ra: f64,
    pub rate_r: f64,
    pub p50: f64,
    pub p75: f64,
    pub t_period_min: Option<f64>,
    pub tau_stable_min: f64,
    pub tau_stable_capped: bool,
    pub t_opt_min: Option<f64>,
    pub threshold: f64,
    pub recommendation: Recommendation,
}

/// Precomputed per-snapshot and cumulative max-flow series plus everything
/// derived from them.
pub struct Analysis<'s> {
    snaps: &'s Snapshots,
    cfg: AnalysisConfig,
    /// Per snapshot: min over sinks of max-flow.
    h_opt: Vec<u32>,
    /// h of the intersection over snapshots 0..=k.
    h_prefix: Vec<u32>,
    /// h of the intersection over snapshots k..end.
    h_suffix: Vec<u32>,
}

/// Time (seconds) to push new code parameters through the whole network:
/// |V|^3 table entries at log2(|T|+1) bits each over one channel.
pub fn t_distribution_s(num_nodes: usize, num_sinks: usize, rate_bps: f64) -> f64 {
    (num_nodes as f64).powi(3) * ((num_sinks as f64) + 1.0).log2() / rate_bps
}

/// Nearest-rank percentile: the smallest sample >= p percent of the set.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Median spacing (in minutes) between local maxima of the series that
/// clear the 90th percentile. Plateaus count once, at their midpoint; a
/// run is a peak only when strictly above the differing values on both
/// sides. None with fewer than two peaks.
pub fn period_minutes(values: &[f64], dt_s: f64) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let thresh = percentile(values, 90.0);
    // Collapse equal runs to (value, start, len).
    let mut runs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.0 == v => run.2 += 1,
            _ => runs.push((v, i, 1)),
        }
    }
    let mut peaks = Vec::new();
    for w in runs.windows(3) {
        let (prev, run, next) = (w[0], w[1], w[2]);
        if run.0 > prev.0 && run.0 > next.0 && run.0 >= thresh {
            peaks.push(run.1 + (run.2 - 1) / 2);
        }
    }
    if peaks.len() < 2 {
        return None;
    }
    let mut gaps: Vec<usize> = peaks.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_unstable();
    let mid = gaps.len() / 2;
    let gap_steps = if gaps.len() % 2 == 1 {
        gaps[mid] as f64
    } else {
        (gaps[mid - 1] + gaps[mid]) as f64 / 2.0
    };
    Some(gap_steps * dt_s / 60.0)
}

impl<'s> Analysis<'s> {
    /// Runs the per-snapshot and cumulative max-flow sweeps (parallel over
    /// snapshots).
    pub fn new(snaps: &'s Snapshots, cfg: AnalysisConfig) -> Result<Analysis<'s>> {
        if snaps.is_empty() {
            return Err(Error::InvalidInput("no snapshots to analyze".into()));
        }
        if cfg.sinks.is_empty() {
            return Err(Error::InvalidInput("sink list is empty".into()));
        }
        let n = snaps.graphs[0].node_count();
        if cfg.source >= n || cfg.sinks.iter().any(|&t| t >= n) {
            return Err(Error::InvalidInput("source/sink id out of range".into()));
        }
        if cfg.sinks.contains(&cfg.source) {
            return Err(Error::InvalidInput("the source cannot be its own sink".into()));
        }
        if !(1..=16).contains(&cfg.field_m) {
            return Err(Error::InvalidInput("field degree must be in 1..=16".into()));
        }

        let h_of = |g: &MultiGraph| -> u32 {
            cfg.sinks.iter().map(|&t| max_flow(g, cfg.source, t)).min().unwrap()
        };

        let h_opt: Vec<u32> = snaps.graphs.par_iter().map(h_of).collect();

        let steps = snaps.len();
        let mut prefix_graphs = Vec::with_capacity(steps);
        let mut acc = snaps.graphs[0].clone();
        prefix_graphs.push(acc.clone());
        for k in 1..steps {
            acc.intersect_in_place(&snaps.graphs[k]);
            prefix_graphs.push(acc.clone());
        }
        let h_prefix: Vec<u32> = prefix_graphs.par_iter().map(h_of).collect();
        drop(prefix_graphs);

        let mut suffix_graphs = vec![snaps.graphs[steps - 1].clone()];
        let mut acc = snaps.graphs[steps - 1].clone();
        for k in (0..steps - 1).rev() {
            acc.intersect_in_place(&snaps.graphs[k]);
            suffix_graphs.push(acc.clone());
        }
        suffix_graphs.reverse();
        let h_suffix: Vec<u32> = suffix_graphs.par_iter().map(h_of).collect();

        Ok(Analysis { snaps, cfg, h_opt, h_prefix, h_suffix })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.cfg
    }

    pub fn dt_s(&self) -> f64 {
        self.snaps.dt_s
    }

    pub fn num_steps(&self) -> usize {
        self.h_opt.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.num_steps() as f64 * self.snaps.dt_s
    }

    /// symbols/s for h parallel channels.
    fn rate(&self, h: u32) -> f64 {
        h as f64 * self.cfg.unit_bps / self.cfg.field_m as f64
    }

    pub fn t_distribution_s(&self) -> f64 {
        t_distribution_s(
            self.snaps.graphs[0].node_count(),
            self.cfg.sinks.len(),
            self.cfg.dist_rate_bps,
        )
    }

    pub fn h_opt(&self) -> &[u32] {
        &self.h_opt
    }

    /// Instantaneous upper bound.
    pub fn r_opt_series(&self) -> RateSeries {
        RateSeries {
            kind: RateKind::Opt,
            dt_s: self.snaps.dt_s,
            values: self.h_opt.iter().map(|&h| self.rate(h)).collect(),
        }
    }

    /// r_intersection(0, k dt) for every k.
    pub fn r_intersection_cum_series(&self) -> RateSeries {
        RateSeries {
            kind: RateKind::Intersection,
            dt_s: self.snaps.dt_s,
            values: self.h_prefix.iter().map(|&h| self.rate(h)).collect(),
        }
    }

    /// r_intersection(k dt, end) for every k.
    pub fn r_intersection_tail_series(&self) -> RateSeries {
        RateSeries {
            kind: RateKind::Intersection,
            dt_s: self.snaps.dt_s,
            values: self.h_suffix.iter().map(|&h| self.rate(h)).collect(),
        }
    }

    /// Cumulative mean of h over the first tau snapshots, divided by the
    /// log of the inflated static field (smallest power of two exceeding
    /// |F| * tau); index k corresponds to tau = k + 1.
    pub fn r_static_series(&self) -> RateSeries {
        let mut values = Vec::with_capacity(self.h_opt.len());
        let mut sum = 0u64;
        for (k, &h) in self.h_opt.iter().enumerate() {
            sum += h as u64;
            let tau = (k + 1) as u64;
            let inflated = (1u64 << self.cfg.field_m) * tau;
            // log2 of the smallest power of two strictly above |F| * tau.
            let log_f_hat = (u64::BITS - inflated.leading_zeros()) as f64;
            let mean_h = sum as f64 / tau as f64;
            values.push(mean_h * self.cfg.unit_bps / log_f_hat);
        }
        RateSeries { kind: RateKind::Static, dt_s: self.snaps.dt_s, values }
    }

    fn window_indices(&self, tau1_s: f64, tau2_s: f64) -> Result<(usize, usize)> {
        if tau1_s > tau2_s || tau1_s < 0.0 {
            return Err(Error::InvalidInput(format!(
                "need 0 <= tau1 <= tau2, got [{tau1_s}, {tau2_s}]"
            )));
        }
        let dt = self.snaps.dt_s;
        let last = self.num_steps() - 1;
        let lo = ((tau1_s / dt) - 1e-9).ceil().max(0.0) as usize;
        let hi = (((tau2_s / dt) + 1e-9).floor() as usize).min(last);
        if lo > hi {
            return Err(Error::InvalidInput(format!(
                "window [{tau1_s}, {tau2_s}] contains no snapshot on the dt={dt} grid"
            )));
        }
        Ok((lo, hi))
    }

    /// Links present in every snapshot of [tau1, tau2] (inclusive,
    /// clamped to the simulated duration).
    pub fn intersection_graph(&self, tau1_s: f64, tau2_s: f64) -> Result<MultiGraph> {
        let (lo, hi) = self.window_indices(tau1_s, tau2_s)?;
        Ok(self.snaps.window_intersection(lo, hi))
    }

    /// Rate of the intersection network over [tau1, tau2].
    pub fn r_intersection(&self, tau1_s: f64, tau2_s: f64) -> Result<f64> {
        let (lo, hi) = self.window_indices(tau1_s, tau2_s)?;
        let h = if lo == 0 {
            self.h_prefix[hi]
        } else if hi == self.num_steps() - 1 {
            self.h_suffix[lo]
        } else {
            let g = self.snaps.window_intersection(lo, hi);
            self.cfg.sinks.iter().map(|&t| max_flow(&g, self.cfg.source, t)).min().unwrap()
        };
        Ok(self.rate(h))
    }

    /// Average throughput when re-coding every sub-interval T within
    /// [0, tau]: sum_k r_intersection((k-1)T, kT) * (T - t_dist) / tau.
    /// T must divide tau on the snapshot grid and exceed the distribution
    /// time.
    pub fn r_interval(&self, tau_s: f64, t_sub_s: f64) -> Result<f64> {
        let dt = self.snaps.dt_s;
        if t_sub_s <= 0.0 || tau_s <= 0.0 {
            return Err(Error::InvalidInput("tau and T must be positive".into()));
        }
        let ratio = tau_s / t_sub_s;
        if (ratio - ratio.round()).abs() > 1e-6 || (t_sub_s / dt - (t_sub_s / dt).round()).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "T={t_sub_s}s must be a grid multiple dividing tau={tau_s}s"
            )));
        }
        let t_dist = self.t_distribution_s();
        if t_sub_s <= t_dist {
            return Err(Error::Degenerate(format!(
                "sub-interval T={t_sub_s}s leaves no airtime (t_distribution={t_dist:.2}s)"
            )));
        }
        let windows = ratio.round() as usize;
        let rates: Result<Vec<f64>> = (1..=windows)
            .into_par_iter()
            .map(|k| self.r_intersection((k - 1) as f64 * t_sub_s, k as f64 * t_sub_s))
            .collect();
        let sum: f64 = rates?.iter().sum();
        Ok(sum * (t_sub_s - t_dist) / tau_s)
    }

    /// Smallest grid time whose tail intersection rate reaches the 90th
    /// percentile of the tail-rate sequence, capped at 2 x t_period.
    pub fn tau_stable(&self) -> TauStable {
        let rates: Vec<f64> = self.h_suffix.iter().map(|&h| self.rate(h)).collect();
        let p90 = percentile(&rates, 90.0);
        let found = rates
            .iter()
            .position(|&q| q >= p90)
            .expect("the maximum always reaches its own percentile");
        let minutes = found as f64 * self.snaps.dt_s / 60.0;
        let cap = match self.t_period_min() {
            Some(p) => 2.0 * p,
            None => self.duration_s() / 60.0,
        };
        if minutes > cap {
            TauStable { minutes: cap, capped: true }
        } else {
            TauStable { minutes, capped: false }
        }
    }

    /// Median peak spacing of r_opt, minutes. None without two peaks.
    pub fn t_period_min(&self) -> Option<f64> {
        let values: Vec<f64> = self.h_opt.iter().map(|&h| self.rate(h)).collect();
        period_minutes(&values, self.snaps.dt_s)
    }

    /// Admissible sub-interval grid for [0, tau]: grid multiples dividing
    /// tau, above the distribution time and at least tau_stable.
    fn admissible_subintervals(&self, tau_s: f64, from_s: f64) -> Vec<f64> {
        let dt = self.snaps.dt_s;
        let steps = (tau_s / dt).round() as usize;
        let t_dist = self.t_distribution_s();
        (1..=steps)
            .filter(|k| steps % k == 0)
            .map(|k| k as f64 * dt)
            .filter(|&t| t > t_dist && t + 1e-9 >= from_s)
            .collect()
    }

    fn sweep_range(&self, tau_s: f64, from_s: f64) -> Result<Vec<(f64, f64)>> {
        self.admissible_subintervals(tau_s, from_s)
            .into_iter()
            .map(|t| Ok((t, self.r_interval(tau_s, t)?)))
            .collect()
    }

    /// The full (T, r_interval) sweep over admissible sub-intervals with
    /// no stability filter; what the interval_sweep CSV reports.
    pub fn interval_sweep(&self, tau_s: f64) -> Result<Vec<(f64, f64)>> {
        self.sweep_range(tau_s, 0.0)
    }

    /// Some(T) when an interior sub-interval strictly beats the boundary
    /// T = tau, None when the rate is maximized at the boundary (the
    /// monotone case). The sweep is restricted to [tau_stable, tau].
    fn pick_t_opt(sweep: &[(f64, f64)]) -> Option<f64> {
        let &(_, boundary_rate) = sweep.last()?;
        let (t_best, r_best) = sweep
            .iter()
            .fold(None::<(f64, f64)>, |best, &(t, r)| match best {
                Some((_, b)) if r <= b => best,
                _ => Some((t, r)),
            })
            .expect("sweep is non-empty");
        (r_best > boundary_rate).then_some(t_best)
    }

    /// Exhaustive T_opt search over [tau_stable, tau].
    pub fn find_t_opt(&self, tau_s: f64) -> Result<Option<f64>> {
        let stable_s = self.tau_stable().minutes * 60.0;
        if tau_s <= stable_s {
            return Err(Error::InvalidInput(format!(
                "tau={tau_s}s must exceed tau_stable={stable_s}s"
            )));
        }
        let sweep = self.sweep_range(tau_s, stable_s)?;
        if sweep.is_empty() {
            return Err(Error::Degenerate(
                "no admissible sub-interval survives the distribution time".into(),
            ));
        }
        Ok(Self::pick_t_opt(&sweep))
    }

    /// Computes the five ratio criteria over the full duration and picks a
    /// scheme: interval iff maxRa >= threshold.
    pub fn criteria(&self) -> Result<CriteriaReport> {
        let r_opt: Vec<f64> = self.h_opt.iter().map(|&h| self.rate(h)).collect();
        let r_int_full = self.rate(*self.h_prefix.last().unwrap());
        if r_int_full <= 0.0 {
            return Err(Error::Degenerate(
                "full-interval intersection rate is zero; ratio criteria are undefined".into(),
            ));
        }
        let max = r_opt.iter().cloned().fold(f64::MIN, f64::max);
        let mean = r_opt.iter().sum::<f64>() / r_opt.len() as f64;
        let median = percentile(&r_opt, 50.0);
        let p75v = percentile(&r_opt, 75.0);

        // rateR and T_opt come from the same admissible range
        // [tau_stable, tau]; that alignment is what lets the maxRa
        // threshold predict the sweep outcome.
        let tau_s = self.duration_s();
        let stable = self.tau_stable();
        let sweep = self.sweep_range(tau_s, stable.minutes * 60.0)?;
        if sweep.is_empty() {
            return Err(Error::Degenerate(
                "no admissible sub-interval survives the distribution time".into(),
            ));
        }
        let rate_r = sweep.iter().map(|&(_, r)| r).fold(f64::MIN, f64::max) / r_int_full;
        let t_opt_min = Self::pick_t_opt(&sweep).map(|t| t / 60.0);

        let max_ra = max / r_int_full;
        let report = CriteriaReport {
            papr: max / mean,
            max_ra,
            rate_r,
            p50: max / median,
            p75: max / p75v,
            t_period_min: self.t_period_min(),
            tau_stable_min: stable.minutes,
            tau_stable_capped: stable.capped,
            t_opt_min,
            threshold: self.cfg.threshold,
            recommendation: if max_ra >= self.cfg.threshold {
                Recommendation::Interval
            } else {
                Recommendation::Intersection
            },
        };
        debug_assert!(report.papr >= 1.0 - 1e-12);
        debug_assert!(report.p50 >= 1.0 - 1e-12);
        debug_assert!(report.p75 <= report.p50 + 1e-12);
        Ok(report)
    }
}

/// rates.csv: per-snapshot r_opt, cumulative intersection and static rates.
pub fn write_rates_csv<W: Write>(analysis: &Analysis<'_>, mut w: W) -> Result<()> {
    let r_opt = analysis.r_opt_series();
    let r_int = analysis.r_intersection_cum_series();
    let r_static = analysis.r_static_series();
    writeln!(w, "t_min,r_opt,r_intersection_cum,r_static_cum")?;
    let dt_min = analysis.dt_s() / 60.0;
    for k in 0..r_opt.values.len() {
        writeln!(
            w,
            "{},{},{},{}",
            k as f64 * dt_min,
            r_opt.values[k],
            r_int.values[k],
            r_static.values[k]
        )?;
    }
    Ok(())
}

/// interval_sweep.csv: r_interval over the admissible sub-interval grid.
pub fn write_interval_sweep_csv<W: Write>(analysis: &Analysis<'_>, mut w: W) -> Result<()> {
    writeln!(w, "T_min,r_interval")?;
    for (t_s, rate) in analysis.interval_sweep(analysis.duration_s())? {
        writeln!(w, "{},{}", t_s / 60.0, rate)?;
    }
    Ok(())
}

/// criteria.csv: one row of ratio criteria plus the recommendation.
pub fn write_criteria_csv<W: Write>(report: &CriteriaReport, mut w: W) -> Result<()> {
    writeln!(w, "papr,maxRa,rateR,p50,p75,t_opt_min,recommendation")?;
    let t_opt = report.t_opt_min.map(|t| t.to_string()).unwrap_or_default();
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        report.papr, report.max_ra, report.rate_r, report.p50, report.p75, t_opt, report.recommendation
    )?;
    Ok(())
}
