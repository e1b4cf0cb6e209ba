//! Hilbert-Schmidt distinguishability of two field trajectories restricted
//! to a spatial region, and its accumulated growth (non-Markovian content).

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::media::{LayerStack, RegionSpec};
use crate::pulse::{Normalization, PulseInjection, SpaceTimeField, Synthesizer, TimeGrid, CHUNK};
use crate::quadrature::Quadrature;
use crate::{Error, Result};

/// Region overlaps `p_ij = ∫ Ψ_i* Ψ_j dx` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapMatrix {
    pub t: f64,
    pub p11: f64,
    pub p22: f64,
    pub p12: C64,
}

impl OverlapMatrix {
    /// `p11 p22 - |p12|^2`, nonnegative up to rounding.
    pub fn schwarz_gap(&self) -> f64 {
        self.p11 * self.p22 - self.p12.norm_sqr()
    }
}

/// `D = sqrt((p11^2 + p22^2 - 2|p12|^2) / 2)`.
pub fn hs_distance(p: &OverlapMatrix) -> Result<f64> {
    let rad = p.p11 * p.p11 + p.p22 * p.p22 - 2.0 * p.p12.norm_sqr();
    if rad < -1e-12 {
        return Err(Error::NumericInconsistency(format!(
            "negative radicand {rad:e} at t = {} (p11 = {}, p22 = {}, |p12| = {})",
            p.t,
            p.p11,
            p.p22,
            p.p12.norm()
        )));
    }
    Ok((0.5 * rad.max(0.0)).sqrt())
}

fn check_same_grids(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<()> {
    let same_x = a.x_grid().len() == b.x_grid().len()
        && a.x_grid().iter().zip(b.x_grid()).all(|(p, q)| p.to_bits() == q.to_bits());
    if !same_x || a.t_grid() != b.t_grid() {
        return Err(Error::IncompatibleGrid("fields are sampled on different grids".into()));
    }
    Ok(())
}

pub fn overlap_matrix(field1: &SpaceTimeField, field2: &SpaceTimeField, region: &RegionSpec, t: f64) -> Result<OverlapMatrix> {
    check_same_grids(field1, field2)?;
    let it = field1
        .t_grid()
        .index_of(t)
        .ok_or_else(|| Error::Domain(format!("t = {t} is not a sample of the time grid")))?;
    let q = Quadrature::over(field1.x_grid(), region.x_lo, region.x_hi)?;
    Ok(overlap_from(&q, field1.row(it), field2.row(it), t))
}

fn overlap_from(q: &Quadrature, row1: &[C64], row2: &[C64], t: f64) -> OverlapMatrix {
    let mut p = OverlapMatrix {
        t,
        p11: 0.0,
        p22: 0.0,
        p12: C64::new(0.0, 0.0),
    };
    for (&i, &w) in q.nodes.iter().zip(&q.weights) {
        let (a, b) = (row1[i], row2[i]);
        p.p11 += w * a.norm_sqr();
        p.p22 += w * b.norm_sqr();
        p.p12 += (a.conj() * b).scale(w);
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSeries {
    pub t_grid: Vec<f64>,
    pub d: Vec<f64>,
    pub overlaps: Vec<OverlapMatrix>,
    pub region: RegionSpec,
    /// Time offset between the trajectories, when known.
    pub tau_m: Option<f64>,
}

/// `D(t)` for every sample of the shared time grid.
pub fn distance_series(field1: &SpaceTimeField, field2: &SpaceTimeField, region: &RegionSpec) -> Result<DistanceSeries> {
    check_same_grids(field1, field2)?;
    let q = Quadrature::over(field1.x_grid(), region.x_lo, region.x_hi)?;
    let tg = field1.t_grid();
    let overlaps: Vec<OverlapMatrix> = (0..tg.len)
        .into_par_iter()
        .map(|it| overlap_from(&q, field1.row(it), field2.row(it), tg.at(it)))
        .collect();
    series_from(overlaps, region.clone(), None)
}

fn series_from(overlaps: Vec<OverlapMatrix>, region: RegionSpec, tau_m: Option<f64>) -> Result<DistanceSeries> {
    let d = overlaps.iter().map(hs_distance).collect::<Result<Vec<_>>>()?;
    Ok(DistanceSeries {
        t_grid: overlaps.iter().map(|p| p.t).collect(),
        d,
        overlaps,
        region,
        tau_m,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonMarkovSeries {
    pub t_grid: Vec<f64>,
    pub id: Vec<f64>,
    pub total: f64,
}

/// Accumulated positive variation of `D`: `ID(t_k) = Σ_{j<k} max(D_{j+1} - D_j, 0)`.
pub fn nonmarkov_content(series: &DistanceSeries) -> Result<NonMarkovSeries> {
    if series.d.len() < 2 {
        return Err(Error::Domain("need at least two time samples".into()));
    }
    let mut acc = 0.0;
    let mut id = Vec::with_capacity(series.d.len());
    id.push(0.0);
    for w in series.d.windows(2) {
        acc += (w[1] - w[0]).max(0.0);
        id.push(acc);
    }
    Ok(NonMarkovSeries {
        t_grid: series.t_grid.clone(),
        id,
        total: acc,
    })
}

/// Two trajectories `Ψ2(x,t) = Ψ1(x, t + τ_M)` driven by the same injection
/// set, each normalized to unit total energy.
#[derive(Debug, Clone)]
pub struct TrajectoryPair {
    first: Synthesizer,
    second: Synthesizer,
    tau_m: f64,
}

impl TrajectoryPair {
    pub fn new(stack: &LayerStack, injections: &[PulseInjection], tau_m: f64) -> Result<Self> {
        let advanced: Vec<PulseInjection> = injections
            .iter()
            .map(|i| i.with_transform(i.scale, i.delay - tau_m))
            .collect();
        Ok(Self {
            first: Synthesizer::new(stack, injections, Normalization::Total)?,
            second: Synthesizer::new(stack, &advanced, Normalization::Total)?,
            tau_m,
        })
    }

    pub fn tau_m(&self) -> f64 {
        self.tau_m
    }

    pub fn first(&self) -> &Synthesizer {
        &self.first
    }

    pub fn second(&self) -> &Synthesizer {
        &self.second
    }

    /// Overlaps and `D(t)` over `region`, integrating on the nodes of
    /// `x_grid`. The field is streamed, never stored; the reduction order is
    /// fixed so results do not depend on the thread count.
    pub fn distance_series(&self, x_grid: &[f64], region: &RegionSpec, times: &TimeGrid) -> Result<DistanceSeries> {
        let q = Quadrature::over(x_grid, region.x_lo, region.x_hi)?;
        let (plan1, plan2) = (self.first.plan(times), self.second.plan(times));
        let pairs: Vec<(usize, f64)> = q.nodes.iter().copied().zip(q.weights.iter().copied()).collect();
        let zero = || vec![(0.0, 0.0, C64::new(0.0, 0.0)); times.len];
        let partials: Vec<Vec<(f64, f64, C64)>> = pairs
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = zero();
                for &(i, w) in chunk {
                    let s1 = self.first.series_with(&plan1, x_grid[i], times);
                    let s2 = self.second.series_with(&plan2, x_grid[i], times);
                    for ((a, u), v) in acc.iter_mut().zip(s1).zip(s2) {
                        a.0 += w * u.norm_sqr();
                        a.1 += w * v.norm_sqr();
                        a.2 += (u.conj() * v).scale(w);
                    }
                }
                acc
            })
            .collect();
        let total = partials.into_iter().fold(zero(), |mut acc, p| {
            for (a, v) in acc.iter_mut().zip(p) {
                a.0 += v.0;
                a.1 += v.1;
                a.2 += v.2;
            }
            acc
        });
        let overlaps = total
            .into_iter()
            .enumerate()
            .map(|(m, (p11, p22, p12))| OverlapMatrix {
                t: times.at(m),
                p11,
                p22,
                p12,
            })
            .collect();
        series_from(overlaps, region.clone(), Some(self.tau_m))
    }
}
