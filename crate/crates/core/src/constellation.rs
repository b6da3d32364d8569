//! Circular-orbit constellation propagation and the time-indexed range /
//! line-of-sight matrix.
//!
//! Motion is pure two-body Keplerian on a spherical Earth: no J2, drag or
//! attitude effects, which keeps the geometry exactly periodic and the
//! whole pipeline reproducible. Node numbering is plane-major: plane p
//! (1-based) holds nodes s*(p-1)+1 ..= s*p, sequential along the plane.
//! Optional ground stations are appended after the satellites.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::{Error, Result};

/// Sidereal rotation rate of the Earth, rad/s. Only ground stations see it.
const OMEGA_EARTH: f64 = 7.292_115_0e-5;

/// Walker-style constellation: evenly spaced circular orbits in evenly
/// spaced planes of common inclination.
#[derive(Debug, Clone)]
pub struct ConstellationSpec {
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub raan_spacing_deg: f64,
    /// Phase offset of plane p's first satellite: p * this, degrees.
    pub intra_plane_phase_deg: f64,
    pub earth_radius_km: f64,
    pub mu_km3s2: f64,
    /// Timestamps are seconds since this epoch; positions at t are
    /// evaluated at elapsed time t.
    pub epoch_s: f64,
}

impl Default for ConstellationSpec {
    /// Iridium-like defaults: 66 satellites, 6 planes 30 degrees apart,
    /// 780 km altitude, 86 degrees inclination.
    fn default() -> Self {
        ConstellationSpec {
            num_planes: 6,
            sats_per_plane: 11,
            altitude_km: 780.0,
            inclination_deg: 86.0,
            raan_spacing_deg: 30.0,
            intra_plane_phase_deg: 0.0,
            earth_radius_km: 6371.0,
            mu_km3s2: 398_600.4418,
            epoch_s: 0.0,
        }
    }
}

impl ConstellationSpec {
    pub fn node_count(&self) -> usize {
        self.num_planes * self.sats_per_plane
    }

    pub fn orbital_radius_km(&self) -> f64 {
        self.earth_radius_km + self.altitude_km
    }

    /// 2 pi sqrt(a^3 / mu).
    pub fn orbital_period_s(&self) -> f64 {
        let a = self.orbital_radius_km();
        2.0 * std::f64::consts::PI * (a.powi(3) / self.mu_km3s2).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_planes == 0 || self.sats_per_plane == 0 {
            return Err(Error::InvalidInput("constellation must have satellites".into()));
        }
        if self.altitude_km <= 0.0 || self.earth_radius_km <= 0.0 || self.mu_km3s2 <= 0.0 {
            return Err(Error::InvalidInput("altitude, radius and mu must be positive".into()));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(Error::InvalidInput("inclination must lie in [0, 180] degrees".into()));
        }
        Ok(())
    }
}

/// A fixed ground site, appended to the node list after the satellites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStation {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

pub type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Inertial positions (km) of all satellites at elapsed time `t_s`.
/// Plane p has RAAN p * raan_spacing; slots are 360/s degrees apart and
/// advance at the circular mean motion.
pub fn propagate(spec: &ConstellationSpec, t_s: f64) -> Vec<Vec3> {
    let a = spec.orbital_radius_km();
    let mean_motion = (spec.mu_km3s2 / a.powi(3)).sqrt(); // rad/s
    let incl = spec.inclination_deg.to_radians();
    let (sin_i, cos_i) = incl.sin_cos();
    let slot_step = 360.0 / spec.sats_per_plane as f64;

    let mut out = Vec::with_capacity(spec.node_count());
    for plane in 0..spec.num_planes {
        let raan = (plane as f64 * spec.raan_spacing_deg).to_radians();
        let (sin_o, cos_o) = raan.sin_cos();
        for slot in 0..spec.sats_per_plane {
            let phase0 = (slot as f64 * slot_step
                + plane as f64 * spec.intra_plane_phase_deg)
                .to_radians();
            let u = phase0 + mean_motion * t_s;
            let (sin_u, cos_u) = u.sin_cos();
            // Rz(raan) * Rx(incl) * (a cos u, a sin u, 0).
            out.push([
                a * (cos_o * cos_u - sin_o * cos_i * sin_u),
                a * (sin_o * cos_u + cos_o * cos_i * sin_u),
                a * sin_i * sin_u,
            ]);
        }
    }
    out
}

/// Inertial position of a ground station at elapsed time `t_s` (the Earth
/// rotates beneath the constellation).
pub fn ground_station_position(gs: &GroundStation, earth_radius_km: f64, t_s: f64) -> Vec3 {
    let lat = gs.lat_deg.to_radians();
    let lon = gs.lon_deg.to_radians() + OMEGA_EARTH * t_s;
    [
        earth_radius_km * lat.cos() * lon.cos(),
        earth_radius_km * lat.cos() * lon.sin(),
        earth_radius_km * lat.sin(),
    ]
}

/// True iff the segment p1-p2 stays clear of the grazing sphere: the
/// minimum distance from the Earth's center to the segment must exceed
/// `grazing_radius_km`. Both endpoints are assumed to sit outside the
/// sphere.
pub fn line_of_sight(p1: Vec3, p2: Vec3, grazing_radius_km: f64) -> bool {
    let d = sub(p2, p1);
    let len2 = dot(d, d);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (-dot(p1, d) / len2).clamp(0.0, 1.0)
    };
    let closest = [p1[0] + t * d[0], p1[1] + t * d[1], p1[2] + t * d[2]];
    norm(closest) > grazing_radius_km
}

/// Satellite-to-ground visibility: elevation above the local horizon.
fn elevation_deg(sat: Vec3, gs: Vec3) -> f64 {
    let rel = sub(sat, gs);
    let s = dot(rel, gs) / (norm(rel) * norm(gs));
    s.clamp(-1.0, 1.0).asin().to_degrees()
}

/// Options for building a [`RangeSeries`].
#[derive(Debug, Clone)]
pub struct RangeSeriesConfig {
    pub duration_s: f64,
    pub dt_s: f64,
    /// Default: the spec's Earth radius (zero atmospheric margin).
    pub grazing_radius_km: Option<f64>,
    pub ground_stations: Vec<GroundStation>,
    /// Elevation mask for satellite-ground links, degrees.
    pub min_elevation_deg: f64,
}

impl Default for RangeSeriesConfig {
    fn default() -> Self {
        RangeSeriesConfig {
            duration_s: 86_400.0,
            dt_s: 60.0,
            grazing_radius_km: None,
            ground_stations: Vec::new(),
            min_elevation_deg: 0.0,
        }
    }
}

/// Time-indexed symmetric distance matrix; NaN encodes "no line of sight".
#[derive(Debug, Clone)]
pub struct RangeSeries {
    n: usize,
    dt_s: f64,
    /// steps * n * n, row-major per step.
    data: Vec<f64>,
}

/// Read-only view of one snapshot.
#[derive(Debug, Clone, Copy)]
pub struct RangeSnapshot<'a> {
    n: usize,
    data: &'a [f64],
}

impl<'a> RangeSnapshot<'a> {
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Distance in km, or None when the pair has no line of sight (or on
    /// the diagonal).
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.data[i * self.n + j];
        v.is_finite().then_some(v)
    }
}

impl RangeSeries {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn num_steps(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.data.len() / (self.n * self.n)
        }
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn duration_s(&self) -> f64 {
        self.num_steps() as f64 * self.dt_s
    }

    pub fn snapshot(&self, step: usize) -> RangeSnapshot<'_> {
        let sz = self.n * self.n;
        RangeSnapshot { n: self.n, data: &self.data[step * sz..(step + 1) * sz] }
    }

    pub fn get(&self, step: usize, i: usize, j: usize) -> Option<f64> {
        self.snapshot(step).get(i, j)
    }

    /// Assembles a series from per-step dense matrices (NaN = no link);
    /// mostly useful for synthetic test scenarios and imports.
    pub fn from_matrices(dt_s: f64, n: usize, steps: Vec<Vec<f64>>) -> Result<RangeSeries> {
        let mut data = Vec::with_capacity(steps.len() * n * n);
        for (k, m) in steps.iter().enumerate() {
            if m.len() != n * n {
                return Err(Error::InvalidInput(format!(
                    "snapshot {k} has {} cells, expected {}",
                    m.len(),
                    n * n
                )));
            }
            data.extend_from_slice(m);
        }
        Ok(RangeSeries { n, dt_s, data })
    }

    /// Writes the long-format CSV `t_s,i,j,range_km` (1-based ids, upper
    /// triangle only; absent pair = no line of sight).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_s,i,j,range_km")?;
        for step in 0..self.num_steps() {
            let t = step as f64 * self.dt_s;
            let snap = self.snapshot(step);
            for i in 0..self.n {
                for j in (i + 1)..self.n {
                    if let Some(r) = snap.get(i, j) {
                        writeln!(w, "{t},{},{},{r:.6}", i + 1, j + 1)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads the long-format CSV back. The time grid is `dt_s`; rows must
    /// sit on it. `min_nodes` pads the node count (isolated nodes never
    /// appear in the file). Snapshots with no rows are all-null.
    pub fn read_csv<R: BufRead>(r: R, dt_s: f64, min_nodes: usize) -> Result<RangeSeries> {
        if dt_s <= 0.0 {
            return Err(Error::InvalidInput("dt must be positive".into()));
        }
        let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
        let mut n = min_nodes;
        let mut max_step = 0usize;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with("t_s") || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!(
                    "range csv line {}: expected `t_s,i,j,range_km`",
                    lineno + 1
                )));
            }
            let t: f64 = parts[0]
                .parse()
                .map_err(|_| Error::Parse(format!("range csv line {}: bad t_s", lineno + 1)))?;
            let step_f = t / dt_s;
            let step = step_f.round() as usize;
            if (step_f - step_f.round()).abs() > 1e-6 {
                return Err(Error::Parse(format!(
                    "range csv line {}: t_s={t} is off the dt={dt_s} grid",
                    lineno + 1
                )));
            }
            let i: usize = parts[1]
                .parse()
                .map_err(|_| Error::Parse(format!("range csv line {}: bad i", lineno + 1)))?;
            let j: usize = parts[2]
                .parse()
                .map_err(|_| Error::Parse(format!("range csv line {}: bad j", lineno + 1)))?;
            let range: f64 = parts[3]
                .parse()
                .map_err(|_| Error::Parse(format!("range csv line {}: bad range", lineno + 1)))?;
            if i == 0 || j == 0 || i == j {
                return Err(Error::Parse(format!(
                    "range csv line {}: ids are 1-based and distinct",
                    lineno + 1
                )));
            }
            if range <= 0.0 {
                return Err(Error::Parse(format!(
                    "range csv line {}: ranges must be positive",
                    lineno + 1
                )));
            }
            n = n.max(i).max(j);
            max_step = max_step.max(step);
            rows.push((step, i - 1, j - 1, range));
        }
        let steps = max_step + 1;
        let mut data = vec![f64::NAN; steps * n * n];
        for (step, i, j, range) in rows {
            data[step * n * n + i * n + j] = range;
            data[step * n * n + j * n + i] = range;
        }
        Ok(RangeSeries { n, dt_s, data })
    }
}

/// Propagates the constellation over the configured grid and applies the
/// line-of-sight test pairwise. Snapshots are independent and computed in
/// parallel.
pub fn range_series(spec: &ConstellationSpec, cfg: &RangeSeriesConfig) -> Result<RangeSeries> {
    spec.validate()?;
    if cfg.dt_s <= 0.0 || cfg.duration_s < cfg.dt_s {
        return Err(Error::InvalidInput(
            "need duration_s >= dt_s > 0 for a range series".into(),
        ));
    }
    let grazing = cfg.grazing_radius_km.unwrap_or(spec.earth_radius_km);
    let sats = spec.node_count();
    let n = sats + cfg.ground_stations.len();
    let steps = (cfg.duration_s / cfg.dt_s).floor() as usize;

    let matrices: Vec<Vec<f64>> = (0..steps)
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * cfg.dt_s;
            let mut pos = propagate(spec, t);
            for gs in &cfg.ground_stations {
                pos.push(ground_station_position(gs, spec.earth_radius_km, t));
            }
            let mut m = vec![f64::NAN; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let visible = match (i < sats, j < sats) {
                        (true, true) => line_of_sight(pos[i], pos[j], grazing),
                        (false, false) => false, // no ground-to-ground links
                        (true, false) => elevation_deg(pos[i], pos[j]) >= cfg.min_elevation_deg,
                        (false, true) => elevation_deg(pos[j], pos[i]) >= cfg.min_elevation_deg,
                    };
                    if visible {
                        let d = norm(sub(pos[i], pos[j]));
                        m[i * n + j] = d;
                        m[j * n + i] = d;
                    }
                }
            }
            m
        })
        .collect();

    RangeSeries::from_matrices(cfg.dt_s, n, matrices)
}
