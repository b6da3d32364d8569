//! Range -> SNR -> Shannon capacity -> integer channel multiplicities.
//!
//! Everything is combined in the log domain: SNR[dB] = Pt[dBW] + Gt + Gr
//! - Lp - 10log10(kB) - 10log10(Ts) - 10log10(R) - Nf, with the free-space
//! loss Lp = 20log10(4 pi d f / c). Capacity then follows Shannon-Hartley
//! with log base 2, and a weighted link becomes floor(C / unit) parallel
//! unit-capacity channels.

use crate::constellation::RangeSnapshot;
use crate::graph::MultiGraph;
use crate::{Error, Result};

const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
const BOLTZMANN_J_K: f64 = 1.380_649e-23;

/// Radio parameters of one link class; every link in the network shares
/// them (omnidirectional antennas, equal transmit power).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub f_hz: f64,
    pub pt_dbm: f64,
    pub gt_dbi: f64,
    pub gr_dbi: f64,
    pub t_sys_k: f64,
    /// Data rate per channel, bits/s (sets Eb).
    pub r_bps: f64,
    pub nf_db: f64,
    /// Channel bandwidth for the capacity formula.
    pub bw_hz: f64,
}

impl Default for LinkParams {
    /// VHF cubesat-style defaults: 146 MHz, 30 dBm, 0 dBi both ends,
    /// 1000 K, 6.4 kbps per FDMA channel, 25 kHz channels.
    fn default() -> Self {
        LinkParams {
            f_hz: 146.0e6,
            pt_dbm: 30.0,
            gt_dbi: 0.0,
            gr_dbi: 0.0,
            t_sys_k: 1000.0,
            r_bps: 6400.0,
            nf_db: 0.0,
            bw_hz: 25_000.0,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        if self.f_hz <= 0.0 || self.r_bps <= 0.0 || self.t_sys_k <= 0.0 || self.bw_hz <= 0.0 {
            return Err(Error::InvalidInput(
                "frequency, data rate, noise temperature and bandwidth must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Free-space loss in dB for a path of `d_km` at `f_hz`.
pub fn free_space_loss_db(d_km: f64, f_hz: f64) -> Result<f64> {
    if d_km <= 0.0 || f_hz <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "free-space loss needs positive distance and frequency (d={d_km} km, f={f_hz} Hz)"
        )));
    }
    let d_m = d_km * 1000.0;
    Ok(20.0 * (4.0 * std::f64::consts::PI * d_m * f_hz / SPEED_OF_LIGHT_M_S).log10())
}

/// Eb/N0 in dB with an explicit path loss. The noise figure enters as a
/// straight dB subtraction.
pub fn snr_with_path_loss_db(params: &LinkParams, path_loss_db: f64) -> f64 {
    let pt_dbw = params.pt_dbm - 30.0;
    pt_dbw + params.gt_dbi + params.gr_dbi - path_loss_db - 10.0 * BOLTZMANN_J_K.log10()
        - 10.0 * params.t_sys_k.log10()
        - 10.0 * params.r_bps.log10()
        - params.nf_db
}

/// Eb/N0 in dB at distance `d_km`, using the free-space loss model.
pub fn snr_db(params: &LinkParams, d_km: f64) -> Result<f64> {
    Ok(snr_with_path_loss_db(params, free_space_loss_db(d_km, params.f_hz)?))
}

/// Shannon-Hartley capacity in bits/s: bw * log2(1 + 10^(snr/10)).
/// snr = -inf maps to zero capacity.
pub fn capacity_bps(snr_db: f64, bw_hz: f64) -> f64 {
    debug_assert!(bw_hz > 0.0);
    bw_hz * (1.0 + 10f64.powf(snr_db / 10.0)).log2()
}

/// Symmetric per-snapshot capacity matrix; NaN encodes "no link".
#[derive(Debug, Clone)]
pub struct CapacityGraph {
    n: usize,
    cap: Vec<f64>,
}

impl CapacityGraph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.cap[i * self.n + j];
        v.is_finite().then_some(v)
    }
}

/// Applies the link budget to one range snapshot. Identical parameters in
/// both directions keep the matrix symmetric.
pub fn capacity_graph(snapshot: &RangeSnapshot<'_>, params: &LinkParams) -> CapacityGraph {
    let n = snapshot.node_count();
    let mut cap = vec![f64::NAN; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(d) = snapshot.get(i, j) {
                let snr = snr_db(params, d).expect("ranges are positive by invariant");
                let c = capacity_bps(snr, params.bw_hz);
                cap[i * n + j] = c;
                cap[j * n + i] = c;
            }
        }
    }
    CapacityGraph { n, cap }
}

/// Rounds each weighted link down to `floor(capacity / unit_bps)` parallel
/// unit channels. Links below one unit disappear. The result is stored as
/// a directed multigraph (full duplex: both directions independently).
pub fn quantize(cap: &CapacityGraph, unit_bps: f64) -> MultiGraph {
    debug_assert!(unit_bps > 0.0);
    let n = cap.node_count();
    let mut g = MultiGraph::new(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if let Some(c) = cap.get(i, j) {
                let m = (c / unit_bps).floor();
                if m >= 1.0 {
                    g.set(i, j, m.min(u32::MAX as f64) as u32);
                }
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::RangeSeries;
    use approx::assert_relative_eq;

    #[test]
    fn free_space_loss_reference_points() {
        // Direct formula evaluations, frozen from an independent pass:
        // 20*log10(4*pi*1e6*146e6/c) and the 2000 km / 437 MHz variant.
        assert_relative_eq!(free_space_loss_db(1000.0, 146.0e6).unwrap(), 135.73, epsilon = 0.1);
        assert_relative_eq!(free_space_loss_db(2000.0, 437.0e6).unwrap(), 151.28, epsilon = 0.1);
        assert!(free_space_loss_db(0.0, 146.0e6).is_err());
        assert!(free_space_loss_db(10.0, -1.0).is_err());
    }

    #[test]
    fn doubling_distance_adds_six_db() {
        let base = free_space_loss_db(1234.0, 146.0e6).unwrap();
        let twice = free_space_loss_db(2468.0, 146.0e6).unwrap();
        assert_relative_eq!(twice - base, 20.0 * 2f64.log10(), epsilon = 1e-9);
    }

    /// L-band inter-satellite row: Pt=15 dBm, G=5/5 dBi, Lp=115 dB,
    /// T=1200 K, R=3 Mbps, Nf=3 dB must come out at 10 dB.
    #[test]
    fn lband_isl_budget_reproduces_ten_db() {
        let params = LinkParams {
            f_hz: 1.2e9,
            pt_dbm: 15.0,
            gt_dbi: 5.0,
            gr_dbi: 5.0,
            t_sys_k: 1200.0,
            r_bps: 3.0e6,
            nf_db: 3.0,
            ..Default::default()
        };
        let snr = snr_with_path_loss_db(&params, 115.0);
        assert_relative_eq!(snr, 10.0, epsilon = 0.5);
    }

    /// S-band variant (Lp=120 dB, R=1 Mbps) computes to 9.8 dB; the
    /// published rounding says 9.
    #[test]
    fn sband_isl_budget_within_a_db() {
        let params = LinkParams {
            f_hz: 2.4e9,
            pt_dbm: 15.0,
            gt_dbi: 5.0,
            gr_dbi: 5.0,
            t_sys_k: 1200.0,
            r_bps: 1.0e6,
            nf_db: 3.0,
            ..Default::default()
        };
        let snr = snr_with_path_loss_db(&params, 120.0);
        assert_relative_eq!(snr, 9.8, epsilon = 0.1);
        assert_relative_eq!(snr, 9.0, epsilon = 1.0);
    }

    #[test]
    fn snr_strictly_decreases_with_distance() {
        let params = LinkParams::default();
        let mut last = f64::INFINITY;
        for d in [100.0, 500.0, 1000.0, 3000.0, 6000.0] {
            let s = snr_db(&params, d).unwrap();
            assert!(s < last);
            last = s;
        }
    }

    #[test]
    fn capacity_reference_points() {
        assert_eq!(capacity_bps(f64::NEG_INFINITY, 1.0e6), 0.0);
        assert_relative_eq!(capacity_bps(0.0, 1.0), 1.0, epsilon = 1e-12);
        // 25 kHz * log2(11), frozen from an independent evaluation.
        assert_relative_eq!(capacity_bps(10.0, 25_000.0), 86_485.79, epsilon = 1.0);
    }

    #[test]
    fn capacity_monotone_in_snr_and_linear_in_bw() {
        assert!(capacity_bps(11.0, 1000.0) > capacity_bps(10.0, 1000.0));
        assert_relative_eq!(
            capacity_bps(7.0, 50_000.0),
            2.0 * capacity_bps(7.0, 25_000.0),
            epsilon = 1e-9
        );
    }

    fn snapshot_series(n: usize, entries: &[(usize, usize, f64)]) -> RangeSeries {
        let mut m = vec![f64::NAN; n * n];
        for &(i, j, d) in entries {
            m[i * n + j] = d;
            m[j * n + i] = d;
        }
        RangeSeries::from_matrices(60.0, n, vec![m]).unwrap()
    }

    #[test]
    fn empty_snapshot_gives_empty_graph() {
        let series = snapshot_series(4, &[]);
        let cap = capacity_graph(&series.snapshot(0), &LinkParams::default());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(cap.get(i, j), None);
            }
        }
    }

    #[test]
    fn capacity_graph_is_symmetric_and_monotone_in_range() {
        let series = snapshot_series(4, &[(0, 1, 800.0), (1, 2, 2400.0), (0, 3, 2400.0)]);
        let cap = capacity_graph(&series.snapshot(0), &LinkParams::default());
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(cap.get(i, j), cap.get(j, i));
            }
        }
        assert!(cap.get(0, 1).unwrap() > cap.get(1, 2).unwrap());
        assert_eq!(cap.get(1, 2), cap.get(0, 3));
    }

    #[test]
    fn quantize_floors_and_drops_sub_unit_links() {
        let mut cap = vec![f64::NAN; 9];
        cap[0 * 3 + 1] = 2.7 * 6400.0;
        cap[1 * 3 + 0] = 2.7 * 6400.0;
        cap[1 * 3 + 2] = 0.9 * 6400.0;
        cap[2 * 3 + 1] = 0.9 * 6400.0;
        let cap = CapacityGraph { n: 3, cap };
        let g = quantize(&cap, 6400.0);
        assert_eq!(g.get(0, 1), 2);
        assert_eq!(g.get(1, 0), 2);
        assert_eq!(g.get(1, 2), 0);
        assert_eq!(g.get(2, 1), 0);
    }

    #[test]
    fn quantized_throughput_never_exceeds_capacity() {
        let series = snapshot_series(5, &[(0, 1, 900.0), (1, 2, 1800.0), (2, 3, 3600.0), (3, 4, 5400.0)]);
        let params = LinkParams::default();
        let cap = capacity_graph(&series.snapshot(0), &params);
        let g = quantize(&cap, 6400.0);
        let mut cap_total = 0.0;
        let mut quant_total = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let c = cap.get(i, j).unwrap_or(0.0);
                let q = g.get(i, j) as f64 * 6400.0;
                assert!(q <= c + 1e-9, "({i},{j}): {q} > {c}");
                cap_total += c;
                quant_total += q;
            }
        }
        assert!(quant_total <= cap_total);
        // Whole-pipeline symmetry.
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
    }
}
