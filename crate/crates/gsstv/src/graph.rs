//! Weighted spatial graph over the pixel grid.
//!
//! The graph connects each pixel to its 8-neighborhood, one edge per
//! unordered pair, and carries a weight per edge computed from a grayscale
//! guide image:
//!
//! ```text
//! w = exp(-|l_p - l_q|_2 / sigma_l) * exp(-|x_p - x_q| / sigma_x)
//! ```
//!
//! where `l_p` is the 2-D grid coordinate of pixel `p` and `x_p` its guide
//! value. Weights are in `(0, 1]` and shrink across intensity edges, so the
//! downstream difference operator penalizes variation inside smooth regions
//! much more than variation across structure boundaries.

use crate::cube::GuideImage;
use crate::error::{Error, Result};

/// Scale parameters for the edge weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphParams {
    /// Spatial-distance scale; larger keeps diagonal neighbors closer to 1.
    pub sigma_l: f64,
    /// Intensity-difference scale; larger tolerates bigger guide jumps.
    pub sigma_x: f64,
}

impl GraphParams {
    pub const DEFAULT_SIGMA_L: f64 = 2.0;
    pub const DEFAULT_SIGMA_X: f64 = 0.1;

    pub fn new(sigma_l: f64, sigma_x: f64) -> Result<Self> {
        if !(sigma_l.is_finite() && sigma_l > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma_l must be positive and finite, got {sigma_l}"
            )));
        }
        if !(sigma_x.is_finite() && sigma_x > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma_x must be positive and finite, got {sigma_x}"
            )));
        }
        Ok(Self { sigma_l, sigma_x })
    }
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            sigma_l: Self::DEFAULT_SIGMA_L,
            sigma_x: Self::DEFAULT_SIGMA_X,
        }
    }
}

/// Undirected weighted graph on an `n1 x n2` pixel grid.
///
/// Edges are stored as `(p, q)` pixel-index pairs with `p < q`, in a
/// deterministic enumeration order, with one weight per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialGraph {
    n1: usize,
    n2: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
}

impl SpatialGraph {
    /// Assembles a graph from explicit parts, validating every invariant:
    /// `p < q`, both within the grid and 8-neighbors of each other, no
    /// duplicate pairs, weights in `(0, 1]`.
    pub fn from_parts(
        n1: usize,
        n2: usize,
        edges: Vec<(usize, usize)>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid dimensions must be positive, got {n1}x{n2}"
            )));
        }
        if edges.len() != weights.len() {
            return Err(Error::DimMismatch {
                what: "edge weights",
                expected: edges.len(),
                actual: weights.len(),
            });
        }
        let pixels = n1 * n2;
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for (e, &(p, q)) in edges.iter().enumerate() {
            if p >= q {
                return Err(Error::InvalidArgument(format!(
                    "edge {e}: expected p < q, got ({p},{q})"
                )));
            }
            if q >= pixels {
                return Err(Error::InvalidArgument(format!(
                    "edge {e}: pixel {q} outside {n1}x{n2} grid"
                )));
            }
            let (pi, pj) = (p % n1, p / n1);
            let (qi, qj) = (q % n1, q / n1);
            let di = pi.abs_diff(qi);
            let dj = pj.abs_diff(qj);
            if di > 1 || dj > 1 {
                return Err(Error::InvalidArgument(format!(
                    "edge {e}: ({p},{q}) is not an 8-neighbor pair"
                )));
            }
            if !seen.insert((p, q)) {
                return Err(Error::InvalidArgument(format!(
                    "edge {e}: duplicate pair ({p},{q})"
                )));
            }
        }
        for (e, &w) in weights.iter().enumerate() {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "weight {e} = {w} outside (0, 1]"
                )));
            }
        }
        Ok(Self {
            n1,
            n2,
            edges,
            weights,
        })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn pixels(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Incidence pattern of the unweighted difference operator: one
    /// `(row, col, coeff)` triplet per nonzero, with coefficient `-1` at `p`
    /// and `+1` at `q` for edge row `e = (p, q)`.
    pub fn incidence_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.edges.len());
        for (row, &(p, q)) in self.edges.iter().enumerate() {
            out.push((row, p, -1.0));
            out.push((row, q, 1.0));
        }
        out
    }
}

/// Number of edges of the full 8-neighborhood graph on an `n1 x n2` grid.
pub fn full_grid_edge_count(n1: usize, n2: usize) -> usize {
    (n1 - 1) * n2 + n1 * (n2 - 1) + 2 * (n1 - 1) * (n2 - 1)
}

/// Builds the 8-neighborhood graph for `guide` with weights from `params`.
///
/// Pixels are scanned row-major (`i` outer, `j` inner) and for each pixel the
/// E, S, SE, SW neighbors are visited in that fixed order, so the edge list is
/// deterministic. Each unordered pair appears exactly once; SW pairs are
/// stored swapped to keep `p < q`.
pub fn build_graph(guide: &GuideImage, params: &GraphParams) -> Result<SpatialGraph> {
    // params may have been struct-literal constructed; enforce positivity here
    let params = GraphParams::new(params.sigma_l, params.sigma_x)?;
    let (n1, n2) = (guide.n1(), guide.n2());
    let mut edges = Vec::with_capacity(full_grid_edge_count(n1, n2));
    let mut weights = Vec::with_capacity(edges.capacity());

    // neighbor offsets (di, dj): E, S, SE, SW
    const OFFSETS: [(isize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];

    for i in 0..n1 {
        for j in 0..n2 {
            for &(di, dj) in &OFFSETS {
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if ni < 0 || ni >= n1 as isize || nj < 0 || nj >= n2 as isize {
                    continue;
                }
                let (ni, nj) = (ni as usize, nj as usize);
                let a = j * n1 + i;
                let b = nj * n1 + ni;
                let (p, q) = if a < b { (a, b) } else { (b, a) };
                let spatial = ((di * di + dj * dj) as f64).sqrt();
                let intensity = (guide.get(i, j) - guide.get(ni, nj)).abs();
                let w = (-spatial / params.sigma_l).exp() * (-intensity / params.sigma_x).exp();
                edges.push((p, q));
                weights.push(w);
            }
        }
    }

    SpatialGraph::from_parts(n1, n2, edges, weights)
}
