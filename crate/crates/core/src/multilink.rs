//! Joint blockage of several links.
//!
//! For a set of links `A`, the blockers hitting at least one of them form a
//! Poisson variable whose mean is the λ-weighted average, over blocker sizes
//! and orientations, of the area of the union of the per-link blocking
//! regions. Inclusion–exclusion over link subsets then gives the probability
//! that every link is blocked.
//!
//! The engine works on *paths*: a path is a group of links that must all be
//! clear for the path to work (a relay hop pair, or a single direct link).
//! Plain link sets are the special case of one link per path. Links asserted
//! clear are conditioned on by the set-difference identity
//! `|U \ C| = |U ∪ C| − |C|`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, BlockageError, Result};
use crate::geom2d::{ConvexPolygon, IntersectionLattice};
use crate::quad::{piecewise_nodes, GaussLegendre};
use crate::shapes::{blocking_region, Link, ScalarDist, ShapeDistribution};

/// Largest number of distinct links (clear set included) in one evaluation.
pub const DEFAULT_LINK_CAP: usize = 12;

/// Tensor Gauss–Legendre node counts for the blocker parameters.
///
/// `nodes_l` and `nodes_w` apply to the whole support. `nodes_h` applies to
/// every piece of the height support between consecutive link endpoint
/// heights. `nodes_theta` is a budget for `[0, π]`, shared across the
/// kink-free pieces between link-aligned and link-normal directions (at least
/// three nodes per piece).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub nodes_l: usize,
    pub nodes_w: usize,
    pub nodes_h: usize,
    pub nodes_theta: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes_l: 16, nodes_w: 16, nodes_h: 8, nodes_theta: 16 }
    }
}

impl QuadratureSpec {
    /// Same count for length, width and orientation; half of it for height pieces.
    pub fn uniform(n: usize) -> Self {
        Self { nodes_l: n, nodes_w: n, nodes_h: n.div_ceil(2).max(1), nodes_theta: n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_l == 0 || self.nodes_w == 0 || self.nodes_h == 0 || self.nodes_theta == 0 {
            return Err(invalid(format!("quadrature node counts must be >= 1, got {self:?}")));
        }
        Ok(())
    }
}

/// Links plus the indices of links known to be in line of sight.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkSet {
    pub links: Vec<Link>,
    pub clear: Vec<usize>,
}

impl LinkSet {
    pub fn new(links: Vec<Link>) -> Result<Self> {
        Self::with_clear(links, Vec::new())
    }

    pub fn with_clear(links: Vec<Link>, clear: Vec<usize>) -> Result<Self> {
        if links.is_empty() {
            return Err(invalid("link set must not be empty"));
        }
        if let Some(i) = clear.iter().find(|&&i| i >= links.len()) {
            return Err(invalid(format!("clear index {i} out of range for {} links", links.len())));
        }
        Ok(Self { links, clear })
    }

    /// One single-link path per link outside the clear set.
    pub fn to_paths(&self) -> PathSet {
        let paths = (0..self.links.len())
            .filter(|i| !self.clear.contains(i))
            .map(|i| vec![i])
            .collect();
        PathSet { links: self.links.clone(), paths, clear: self.clear.clone() }
    }
}

/// Alternative paths over a shared pool of links.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSet {
    pub links: Vec<Link>,
    /// Each path lists indices into `links`; it works iff all are unblocked.
    pub paths: Vec<Vec<usize>>,
    /// Links conditioned to be unblocked.
    pub clear: Vec<usize>,
}

impl PathSet {
    pub fn validate(&self, cap: usize) -> Result<()> {
        let n = self.links.len();
        if self.paths.iter().flatten().chain(&self.clear).any(|&i| i >= n) {
            return Err(invalid("path or clear index out of range"));
        }
        if self.paths.iter().any(|p| p.is_empty()) {
            return Err(invalid("a path must contain at least one link"));
        }
        let used = self.used_links();
        if used.count_ones() as usize > cap || n > 32 {
            return Err(BlockageError::UnsupportedSize { got: used.count_ones() as usize, cap });
        }
        if self.paths.len() > cap {
            return Err(BlockageError::UnsupportedSize { got: self.paths.len(), cap });
        }
        Ok(())
    }

    fn mask_of(idx: &[usize]) -> u32 {
        idx.iter().fold(0u32, |m, &i| m | (1u32 << i))
    }

    fn used_links(&self) -> u32 {
        self.paths.iter().fold(Self::mask_of(&self.clear), |m, p| m | Self::mask_of(p))
    }
}

/// Probability that every path fails, with and without link correlation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointBlockage {
    /// Inclusion–exclusion value clamped to `[0, 1]`.
    pub p_all_failed: f64,
    /// Unclamped inclusion–exclusion sum.
    pub p_all_failed_raw: f64,
    /// Baseline treating every link as independently blocked.
    pub p_all_failed_independent: f64,
}

/// Weighted evaluation points for the four blocker parameters.
struct NodeGrid {
    /// `(h, θ, weight)`
    outer: Vec<(f64, f64, f64)>,
    /// `(l, w, weight)`
    inner: Vec<(f64, f64, f64)>,
}

fn size_nodes(dist: &ScalarDist, n: usize) -> Vec<(f64, f64)> {
    match *dist {
        ScalarDist::Uniform { max } if max > 0.0 => {
            GaussLegendre::new(n).on(0.0, max).map(|(x, w)| (x, w / max)).collect()
        }
        _ => vec![(dist.upper(), 1.0)],
    }
}

/// Orientation nodes for `Θ ~ U[0, period]`, with `period = π`.
///
/// The integrand is π-periodic in θ with kinks where the blocker axis is
/// parallel or normal to a link. Pieces run cyclically between those
/// directions only, so rotating every link by the same angle rotates the
/// nodes with it.
fn orientation_nodes(links: &[Link], period: f64, budget: usize) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = links
        .iter()
        .filter(|l| l.length() > 0.0)
        .flat_map(|l| {
            let a = l.axis_angle();
            [a, (a + FRAC_PI_2).rem_euclid(PI)]
        })
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    if cuts.len() > 1 && cuts[0] + period - cuts[cuts.len() - 1] <= 1e-12 {
        cuts.pop();
    }
    if cuts.is_empty() {
        cuts.push(0.0);
    }
    let n_cuts = cuts.len();
    let mut out = Vec::new();
    for i in 0..n_cuts {
        let a = cuts[i];
        let b = if i + 1 < n_cuts { cuts[i + 1] } else { cuts[0] + period };
        let share = (b - a) / period;
        let n = ((budget as f64 * share).ceil() as usize).max(3);
        out.extend(GaussLegendre::new(n).on(a, b).map(|(t, w)| (t, w / period)));
    }
    out
}

impl NodeGrid {
    fn new(links: &[Link], dist: &ShapeDistribution, quad: &QuadratureSpec) -> Self {
        let heights: Vec<(f64, f64)> = match dist.height {
            None => vec![(f64::INFINITY, 1.0)],
            Some(ScalarDist::Uniform { max }) if max > 0.0 => {
                let breaks: Vec<f64> = links.iter().flat_map(|l| [l.height_a, l.height_b]).collect();
                piecewise_nodes(&GaussLegendre::new(quad.nodes_h), 0.0, max, &breaks)
                    .into_iter()
                    .map(|(h, w)| (h, w / max))
                    .collect()
            }
            Some(d) => vec![(d.upper(), 1.0)],
        };
        let thetas: Vec<(f64, f64)> = match dist.orientation {
            ScalarDist::Uniform { max } if max > 0.0 => orientation_nodes(links, max, quad.nodes_theta),
            ScalarDist::Uniform { .. } => vec![(0.0, 1.0)],
            ScalarDist::Deterministic { value } => vec![(value, 1.0)],
        };
        let outer = heights
            .iter()
            .flat_map(|&(h, wh)| thetas.iter().map(move |&(t, wt)| (h, t, wh * wt)))
            .collect();
        let ls = size_nodes(&dist.length, quad.nodes_l);
        let ws = size_nodes(&dist.width, quad.nodes_w);
        let inner = ls
            .iter()
            .flat_map(|&(l, wl)| ws.iter().map(move |&(w, ww)| (l, w, wl * ww)))
            .collect();
        Self { outer, inner }
    }
}

/// `E[K_U]` for every mask `U` (bits index `links`), by tensor quadrature of
/// λ·|∪_{i∈U} S_i(l, w, h, θ)|.
///
/// Outer nodes are evaluated in parallel; partial sums are added in node
/// order so the result does not depend on scheduling.
pub fn expected_blockers_masks(
    links: &[Link],
    masks: &[u32],
    dist: &ShapeDistribution,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    dist.validate()?;
    quad.validate()?;
    if links.len() > 32 {
        return Err(BlockageError::UnsupportedSize { got: links.len(), cap: 32 });
    }
    if dist.density == 0.0 || masks.is_empty() {
        return Ok(vec![0.0; masks.len()]);
    }
    let used = masks.iter().fold(0u32, |a, m| a | m);
    let active: Vec<usize> = (0..links.len()).filter(|i| used & (1 << i) != 0).collect();
    let active_links: Vec<Link> = active.iter().map(|&i| links[i]).collect();
    // remap masks onto the active links only
    let local: Vec<u32> = masks
        .iter()
        .map(|&m| {
            active
                .iter()
                .enumerate()
                .filter(|(_, &i)| m & (1 << i) != 0)
                .fold(0u32, |a, (k, _)| a | (1 << k))
        })
        .collect();
    let grid = NodeGrid::new(&active_links, dist, quad);
    let partials: Vec<Result<Vec<f64>>> = grid
        .outer
        .par_iter()
        .map(|&(h, theta, w_outer)| {
            let mut acc = vec![0.0; local.len()];
            let mut polys: Vec<ConvexPolygon> = Vec::with_capacity(active_links.len());
            for &(l, w, w_inner) in &grid.inner {
                polys.clear();
                for link in &active_links {
                    polys.push(blocking_region(link, l, w, h, theta)?);
                }
                let lattice = IntersectionLattice::new(&polys);
                let weight = w_outer * w_inner;
                for (a, &m) in acc.iter_mut().zip(&local) {
                    *a += weight * lattice.union_area(m);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![0.0; masks.len()];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part?) {
            *t += p;
        }
    }
    Ok(total.into_iter().map(|v| dist.density * v).collect())
}

/// `E[K_A]`: mean number of blockers hitting at least one of `links`.
pub fn expected_blockers_union(links: &[Link], dist: &ShapeDistribution, quad: &QuadratureSpec) -> Result<f64> {
    if links.is_empty() {
        return Err(invalid("link list must not be empty"));
    }
    if links.len() > DEFAULT_LINK_CAP {
        return Err(BlockageError::UnsupportedSize { got: links.len(), cap: DEFAULT_LINK_CAP });
    }
    let all = u32::MAX >> (32 - links.len());
    Ok(expected_blockers_masks(links, &[all], dist, quad)?[0])
}

/// Probability that all paths fail, by inclusion–exclusion over path subsets.
pub fn evaluate_paths(ps: &PathSet, dist: &ShapeDistribution, quad: &QuadratureSpec) -> Result<JointBlockage> {
    let all = if ps.paths.is_empty() { 0 } else { u32::MAX >> (32 - ps.paths.len().min(32)) };
    Ok(evaluate_path_selections(ps, &[all], dist, quad)?[0])
}

/// Like [`evaluate_paths`] for several sub-selections of the paths at once
/// (bit `k` of a selection keeps path `k`). The geometry is integrated once
/// for all selections.
pub fn evaluate_path_selections(
    ps: &PathSet,
    selections: &[u32],
    dist: &ShapeDistribution,
    quad: &QuadratureSpec,
) -> Result<Vec<JointBlockage>> {
    ps.validate(DEFAULT_LINK_CAP)?;
    let n_paths = ps.paths.len();
    let full = if n_paths == 0 { 0 } else { u32::MAX >> (32 - n_paths) };
    if selections.iter().any(|s| s & !full != 0) {
        return Err(invalid("path selection refers to a missing path"));
    }
    let clear = PathSet::mask_of(&ps.clear);
    let path_masks: Vec<u32> = ps.paths.iter().map(|p| PathSet::mask_of(p)).collect();
    let union = selections.iter().fold(0u32, |a, s| a | s);

    let mut masks: Vec<u32> = Vec::new();
    let mut slot: HashMap<u32, usize> = HashMap::new();
    let mut intern = |m: u32, masks: &mut Vec<u32>| -> usize {
        *slot.entry(m).or_insert_with(|| {
            masks.push(m);
            masks.len() - 1
        })
    };
    let clear_slot = (clear != 0).then(|| intern(clear, &mut masks));
    // every non-empty subset of the selected paths, keyed by path subset
    let mut subset_slots: HashMap<u32, usize> = HashMap::new();
    for &sel in selections {
        let mut sub = sel;
        while sub != 0 {
            if !subset_slots.contains_key(&sub) {
                let m = (0..n_paths)
                    .filter(|k| sub & (1 << k) != 0)
                    .fold(clear, |a, k| a | path_masks[k]);
                subset_slots.insert(sub, intern(m, &mut masks));
            }
            sub = (sub - 1) & sel;
        }
    }
    let link_slots: Vec<Vec<usize>> = ps
        .paths
        .iter()
        .enumerate()
        .map(|(k, p)| {
            if union & (1 << k) == 0 {
                return Vec::new();
            }
            p.iter().map(|&i| intern(clear | (1 << i), &mut masks)).collect()
        })
        .collect();

    let ek = expected_blockers_masks(&ps.links, &masks, dist, quad)?;
    let base = clear_slot.map_or(0.0, |s| ek[s]);
    let conditional = |s: usize| (ek[s] - base).max(0.0);

    Ok(selections
        .iter()
        .map(|&sel| {
            let mut any_ok = 0.0;
            let mut subs: Vec<u32> = Vec::new();
            let mut sub = sel;
            while sub != 0 {
                subs.push(sub);
                sub = (sub - 1) & sel;
            }
            subs.sort_unstable();
            for sub in subs {
                let sign = if sub.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
                any_ok += sign * (-conditional(subset_slots[&sub])).exp();
            }
            let raw = 1.0 - any_ok;
            let independent = (0..n_paths)
                .filter(|k| sel & (1 << k) != 0)
                .map(|k| 1.0 - link_slots[k].iter().map(|&s| (-conditional(s)).exp()).product::<f64>())
                .product();
            JointBlockage {
                p_all_failed: raw.clamp(0.0, 1.0),
                p_all_failed_raw: raw,
                p_all_failed_independent: independent,
            }
        })
        .collect())
}

/// `P(allKO)`: every link outside the clear set is blocked, given the clear
/// links are not.
pub fn p_all_blocked(ls: &LinkSet, dist: &ShapeDistribution, quad: &QuadratureSpec) -> Result<f64> {
    Ok(evaluate_paths(&ls.to_paths(), dist, quad)?.p_all_failed)
}

/// Baseline `∏ (1 − e^{−E[K_n]})` that ignores correlation between links.
pub fn p_all_blocked_independent(ls: &LinkSet, dist: &ShapeDistribution, quad: &QuadratureSpec) -> Result<f64> {
    Ok(evaluate_paths(&ls.to_paths(), dist, quad)?.p_all_failed_independent)
}
