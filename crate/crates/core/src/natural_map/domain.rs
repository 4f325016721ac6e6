//! Dirichlet fundamental domains: orbit enumeration over a word ball,
//! representative location, and covariant interior grids.

use std::sync::Arc;

use crate::cocycles::{GroupPresentation, Word};
use crate::error::{Error, Result};
use crate::geometry::{Isometry, ModelPoint, ModelSpace};

/// One enumerated orbit element gamma with its point gamma.o.
#[derive(Debug, Clone)]
pub struct OrbitElement {
    pub word: Word,
    pub isometry: Isometry,
    pub point: ModelPoint,
    /// d(o, gamma.o)
    pub distance: f64,
}

/// Dirichlet fundamental domain machinery for a realized group: the orbit of
/// the base point over a word ball, deduplicated by orbit point (the actions
/// are free) and sorted by distance then canonical word order.
#[derive(Debug, Clone)]
pub struct FundamentalDomain {
    pub space: ModelSpace,
    pub presentation: GroupPresentation,
    pub base: ModelPoint,
    pub radius: usize,
    elements: Vec<OrbitElement>,
    tie_tol: f64,
}

/// Canonical word order: shorter first, then letters compared with
/// +1 < -1 < +2 < -2 < ...
pub fn word_order_key(w: &Word) -> Vec<i32> {
    let mut key = vec![w.0.len() as i32];
    for &l in &w.0 {
        key.push(if l > 0 { 2 * l - 1 } else { -2 * l });
    }
    key
}

fn quantize_point(p: &ModelPoint) -> Vec<i64> {
    p.factors
        .iter()
        .flat_map(|f| f.iter().map(|x| (x * 1e9).round() as i64))
        .collect()
}

impl FundamentalDomain {
    /// Enumerate the orbit over reduced words of length <= radius.
    pub fn build(
        space: &ModelSpace,
        presentation: &GroupPresentation,
        radius: usize,
    ) -> Result<Self> {
        let gens = presentation
            .realization
            .as_ref()
            .ok_or_else(|| Error::Config("domain needs a realized group".into()))?
            .clone();
        let base = space.origin();
        let mut elements: Vec<OrbitElement> = Vec::new();
        let mut seen = std::collections::HashMap::new();

        let identity = space.identity();
        let root = OrbitElement {
            word: Word::empty(),
            isometry: identity,
            point: base.clone(),
            distance: 0.0,
        };
        seen.insert(quantize_point(&root.point), 0usize);
        elements.push(root);

        // letters in canonical order so BFS discovery is canonical
        let letters: Vec<i32> = (1..=presentation.num_generators as i32)
            .flat_map(|g| [g, -g])
            .collect();
        let mut frontier: Vec<usize> = vec![0];
        for _ in 0..radius {
            let mut next = Vec::new();
            for &idx in &frontier {
                let (prev_word, prev_iso) =
                    (elements[idx].word.clone(), elements[idx].isometry.clone());
                let last = prev_word.0.last().copied();
                for &l in &letters {
                    if last == Some(-l) {
                        continue;
                    }
                    let g = if l > 0 {
                        gens[(l - 1) as usize].clone()
                    } else {
                        gens[(-l - 1) as usize].inverse()
                    };
                    let iso = prev_iso.compose(&g);
                    let point = iso.apply_point(&base);
                    let key = quantize_point(&point);
                    if seen.contains_key(&key) {
                        continue;
                    }
                    let mut w = prev_word.0.clone();
                    w.push(l);
                    let distance = space.distance_unchecked(&base, &point);
                    seen.insert(key, elements.len());
                    next.push(elements.len());
                    elements.push(OrbitElement {
                        word: Word(w),
                        isometry: iso,
                        point,
                        distance,
                    });
                }
            }
            frontier = next;
        }

        elements.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then_with(|| word_order_key(&a.word).cmp(&word_order_key(&b.word)))
        });
        // quantization stragglers: merge elements whose orbit points coincide
        let mut deduped: Vec<OrbitElement> = Vec::with_capacity(elements.len());
        'outer: for e in elements {
            for prev in deduped.iter().rev() {
                if e.distance - prev.distance > 1e-8 {
                    break;
                }
                if e.point.close_to(&prev.point, 1e-9) {
                    continue 'outer;
                }
            }
            deduped.push(e);
        }

        Ok(Self {
            space: space.clone(),
            presentation: presentation.clone(),
            base,
            radius,
            elements: deduped,
            tie_tol: 1e-9,
        })
    }

    pub fn elements(&self) -> &[OrbitElement] {
        &self.elements
    }

    /// Locate the Dirichlet representative: the orbit point nearest to `a`,
    /// ties broken by canonical word order. Errors when the argmin touches
    /// the enumeration boundary (coverage cannot be certified), never
    /// returning a wrong representative silently.
    pub fn locate(&self, a: &ModelPoint) -> Result<Located> {
        self.space.validate_point(a)?;
        let mut best_dist = f64::INFINITY;
        for e in &self.elements {
            let d = self.space.distance_unchecked(a, &e.point);
            if d < best_dist {
                best_dist = d;
            }
        }
        let mut best: Option<&OrbitElement> = None;
        for e in &self.elements {
            let d = self.space.distance_unchecked(a, &e.point);
            if d <= best_dist + self.tie_tol {
                match best {
                    None => best = Some(e),
                    Some(b) => {
                        if word_order_key(&e.word) < word_order_key(&b.word) {
                            best = Some(e);
                        }
                    }
                }
            }
        }
        let e = best.expect("orbit ball is nonempty");
        if e.word.len() >= self.radius {
            return Err(Error::Coverage(format!(
                "nearest orbit word has length {} at the enumeration radius {}; \
                 enlarge the word ball",
                e.word.len(),
                self.radius
            )));
        }
        let inv = e.isometry.inverse();
        Ok(Located {
            word: e.word.clone(),
            isometry: e.isometry.clone(),
            representative: inv.apply_point(a),
        })
    }

    /// Membership in the Dirichlet domain: the identity is the located word.
    pub fn contains(&self, a: &ModelPoint) -> Result<bool> {
        Ok(self.locate(a)?.word.is_empty())
    }

    /// The `budget` orbit points nearest to `a`, recentered at the located
    /// representative so the selection is exactly isometry-covariant: the
    /// returned node set for (gamma.a) is gamma times the set for `a`.
    /// Distance ties at the cutoff are all included.
    pub fn covariant_grid(&self, a: &ModelPoint, budget: usize) -> Result<GridSelection> {
        let located = self.locate(a)?;
        let a0 = &located.representative;
        let mut scored: Vec<(f64, usize)> = self
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| (self.space.distance_unchecked(a0, &e.point), i))
            .collect();
        scored.sort_by(|x, y| {
            x.0.total_cmp(&y.0)
                .then_with(|| word_order_key(&self.elements[x.1].word).cmp(&word_order_key(&self.elements[y.1].word)))
        });
        let budget = budget.min(scored.len());
        let cutoff = scored[budget - 1].0;
        let take: Vec<(f64, usize)> = scored
            .into_iter()
            .take_while(|(d, _)| *d <= cutoff + self.tie_tol)
            .collect();
        let nodes = take
            .iter()
            .map(|(d, i)| {
                let e = &self.elements[*i];
                GridNode {
                    word: located.word.concat(&e.word),
                    point: located.isometry.apply_point(&e.point),
                    distance_to_center: *d,
                }
            })
            .collect();
        Ok(GridSelection {
            located,
            nodes,
        })
    }
}

/// Result of a Dirichlet location: a = isometry . representative.
#[derive(Debug, Clone)]
pub struct Located {
    pub word: Word,
    pub isometry: Isometry,
    pub representative: ModelPoint,
}

/// One covariant-grid node: an orbit point with its full word.
#[derive(Debug, Clone)]
pub struct GridNode {
    pub word: Word,
    pub point: ModelPoint,
    /// d(a, node), computed in the recentered frame.
    pub distance_to_center: f64,
}

/// Covariant interior grid around an evaluation point.
#[derive(Debug, Clone)]
pub struct GridSelection {
    pub located: Located,
    pub nodes: Vec<GridNode>,
}

pub type SharedDomain = Arc<FundamentalDomain>;
