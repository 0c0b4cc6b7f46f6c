//! Geometry and raster data behind the figures: feature hyperplanes, response
//! grids over 2D input space, feature image tiles, and negative-pair reports.
//! File encodings live in the `switchcode` crate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::encoders::{negative_pair, Model, NegativePair};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::linalg::{dot, norm, Matrix};

/// Switching boundary `normal · p + offset = 0` of one hidden unit. For a
/// sigmoid unit this is also its 0.5 level set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePlane {
    pub feature: usize,
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl FeaturePlane {
    /// Point of the plane closest to the origin.
    pub fn anchor(&self) -> Vec<f64> {
        let nn = dot(&self.normal, &self.normal);
        self.normal.iter().map(|v| -self.offset * v / nn).collect()
    }

    pub fn signed_value(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) + self.offset
    }

    /// Signed distance from the origin along the unit normal.
    pub fn distance_from_origin(&self) -> f64 {
        -self.offset / norm(&self.normal)
    }

    /// Intersection with the axis-aligned box `[lo, hi]`: a segment (two
    /// points) in 2D, a convex polygon in 3D ordered around its centroid.
    /// Empty when the plane misses the box.
    pub fn clip_to_box(&self, lo: &[f64], hi: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.normal.len();
        if lo.len() != n || hi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: lo.len().min(hi.len()),
            });
        }
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "box clipping supports 2 or 3 dimensions, got {n}"
            )));
        }
        let corner = |mask: usize| -> Vec<f64> {
            (0..n)
                .map(|d| if mask >> d & 1 == 1 { hi[d] } else { lo[d] })
                .collect()
        };
        let mut points: Vec<Vec<f64>> = Vec::new();
        let scale = lo.iter().chain(hi).fold(1.0f64, |m, v| m.max(libm::fabs(*v)));
        for mask in 0..(1usize << n) {
            for d in 0..n {
                if mask >> d & 1 == 1 {
                    continue;
                }
                let a = corner(mask);
                let b = corner(mask | 1 << d);
                let sa = self.signed_value(&a);
                let sb = self.signed_value(&b);
                if (sa > 0.0 && sb > 0.0) || (sa < 0.0 && sb < 0.0) {
                    continue;
                }
                let p: Vec<f64> = if sa == sb {
                    // edge lies in the plane
                    a.clone()
                } else {
                    let t = sa / (sa - sb);
                    a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect()
                };
                let dup = points.iter().any(|q| {
                    q.iter().zip(&p).all(|(u, v)| libm::fabs(u - v) <= 1e-12 * scale)
                });
                if !dup {
                    points.push(p);
                }
            }
        }
        if n == 3 && points.len() > 2 {
            order_polygon(&mut points, &self.normal);
        }
        Ok(points)
    }
}

fn order_polygon(points: &mut [Vec<f64>], normal: &[f64]) {
    let count = points.len() as f64;
    let centroid: Vec<f64> = (0..3)
        .map(|d| points.iter().map(|p| p[d]).sum::<f64>() / count)
        .collect();
    // in-plane basis: e1 ⟂ normal, e2 = normal × e1
    let nn = norm(normal);
    let unit: Vec<f64> = normal.iter().map(|v| v / nn).collect();
    let helper = if libm::fabs(unit[0]) < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let proj = dot(&helper, &unit);
    let mut e1: Vec<f64> = helper.iter().zip(&unit).map(|(h, u)| h - proj * u).collect();
    let n1 = norm(&e1);
    e1.iter_mut().for_each(|v| *v /= n1);
    let e2 = [
        unit[1] * e1[2] - unit[2] * e1[1],
        unit[2] * e1[0] - unit[0] * e1[2],
        unit[0] * e1[1] - unit[1] * e1[0],
    ];
    let angle = |p: &Vec<f64>| {
        let rel: Vec<f64> = p.iter().zip(&centroid).map(|(a, c)| a - c).collect();
        libm::atan2(dot(&rel, &e2), dot(&rel, &e1))
    };
    points.sort_by(|a, b| angle(a).total_cmp(&angle(b)));
}

/// Feature planes of a single-layer model plus features skipped for having a
/// zero normal.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSet {
    pub planes: Vec<FeaturePlane>,
    pub skipped: Vec<usize>,
}

pub fn hyperplanes(model: &Model) -> Result<PlaneSet> {
    let layer = model.require_single_layer()?;
    let mut planes = Vec::new();
    let mut skipped = Vec::new();
    for (j, (w, &b)) in layer.weights.row_iter().zip(&layer.bias).enumerate() {
        if w.iter().all(|v| *v == 0.0) {
            skipped.push(j);
            continue;
        }
        planes.push(FeaturePlane {
            feature: j,
            normal: w.to_vec(),
            offset: b,
        });
    }
    Ok(PlaneSet { planes, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    Sum,
    PerFeature(usize),
}

/// Code responses sampled on a regular 2D lattice. `values[iy * nx + ix]`
/// is the response at `point(ix, iy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseGrid {
    pub bounds: [(f64, f64); 2],
    pub resolution: [usize; 2],
    pub values: Vec<f64>,
    pub mode: GridMode,
}

fn lattice(lo: f64, hi: f64, res: usize, i: usize) -> f64 {
    if res == 1 {
        lo
    } else {
        lo + (hi - lo) * i as f64 / (res - 1) as f64
    }
}

impl ResponseGrid {
    pub fn point(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            lattice(self.bounds[0].0, self.bounds[0].1, self.resolution[0], ix),
            lattice(self.bounds[1].0, self.bounds[1].1, self.resolution[1], iy),
        ]
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.resolution[0] + ix]
    }
}

pub fn response_grid(
    model: &Model,
    bounds: [(f64, f64); 2],
    resolution: [usize; 2],
    mode: GridMode,
) -> Result<ResponseGrid> {
    response_grid_with(&Sequential, model, bounds, resolution, mode)
}

pub fn response_grid_with<E: Executor>(
    exec: &E,
    model: &Model,
    bounds: [(f64, f64); 2],
    resolution: [usize; 2],
    mode: GridMode,
) -> Result<ResponseGrid> {
    if model.input_dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "response grids need 2D inputs, model expects {}",
            model.input_dim()
        )));
    }
    if resolution.contains(&0) {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    for &(lo, hi) in &bounds {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidArgument(format!("bad grid bounds ({lo}, {hi})")));
        }
    }
    if let GridMode::PerFeature(j) = mode {
        if j >= model.code_dim() {
            return Err(Error::InvalidArgument(format!(
                "feature {j} out of range for {} units",
                model.code_dim()
            )));
        }
    }
    let mut grid = ResponseGrid {
        bounds,
        resolution,
        values: Vec::new(),
        mode,
    };
    let [nx, ny] = resolution;
    let rows = exec.map_indexed(ny, |iy| {
        (0..nx)
            .map(|ix| {
                let h = model.encode(&grid.point(ix, iy)).map(|e| e.h)?;
                Ok(match mode {
                    GridMode::Sum => h.iter().sum(),
                    GridMode::PerFeature(j) => h[j],
                })
            })
            .collect::<Result<Vec<f64>>>()
    });
    let mut values = Vec::with_capacity(nx * ny);
    for r in rows {
        values.extend(r?);
    }
    grid.values = values;
    Ok(grid)
}

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

/// Rescales to `[0, 255]` (min to 0, max to 255); a constant vector maps to 128.
pub fn rescale_to_bytes(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0 && range.is_finite()) {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|&v| libm::round(255.0 * (v - lo) / range) as u8)
        .collect()
}

/// Feature images arranged on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TileSheet {
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Feature index shown in each tile, in grid order.
    pub order: Vec<usize>,
    pub tiles: Vec<Vec<u8>>,
}

impl TileSheet {
    /// Tiles separated by `pad` background pixels; no outer border.
    pub fn composite(&self, pad: usize, background: u8) -> GrayImage {
        let width = self.grid_cols * self.tile_cols + pad * self.grid_cols.saturating_sub(1);
        let height = self.grid_rows * self.tile_rows + pad * self.grid_rows.saturating_sub(1);
        let mut pixels = vec![background; width * height];
        for (t, tile) in self.tiles.iter().enumerate() {
            let gy = t / self.grid_cols;
            let gx = t % self.grid_cols;
            let oy = gy * (self.tile_rows + pad);
            let ox = gx * (self.tile_cols + pad);
            for r in 0..self.tile_rows {
                let src = &tile[r * self.tile_cols..(r + 1) * self.tile_cols];
                let at = (oy + r) * width + ox;
                pixels[at..at + self.tile_cols].copy_from_slice(src);
            }
        }
        GrayImage {
            width,
            height,
            pixels,
        }
    }
}

fn descending_bias_order(bias: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..bias.len()).collect();
    order.sort_by(|&a, &b| bias[b].total_cmp(&bias[a]));
    order
}

fn square_grid(count: usize) -> (usize, usize) {
    let cols = (1..=count.max(1)).find(|c| c * c >= count).unwrap_or(1);
    (count.div_ceil(cols).max(1), cols)
}

/// Tiles for arbitrary feature rows (`features` is `k × rows·cols`), ordered
/// by descending `bias`, at most `limit` of them.
pub fn tiles_from_rows(
    features: &Matrix,
    bias: &[f64],
    image_shape: (usize, usize),
    limit: Option<usize>,
) -> Result<TileSheet> {
    let (tile_rows, tile_cols) = image_shape;
    if tile_rows * tile_cols != features.cols() {
        return Err(Error::DimensionMismatch {
            expected: features.cols(),
            found: tile_rows * tile_cols,
        });
    }
    if bias.len() != features.rows() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            found: bias.len(),
        });
    }
    let mut order = descending_bias_order(bias);
    order.truncate(limit.unwrap_or(order.len()));
    let tiles = order
        .iter()
        .map(|&j| rescale_to_bytes(features.row(j)))
        .collect();
    let (grid_rows, grid_cols) = square_grid(order.len());
    Ok(TileSheet {
        tile_rows,
        tile_cols,
        grid_rows,
        grid_cols,
        order,
        tiles,
    })
}

/// First-layer feature images, ordered by descending bias.
pub fn feature_tiles(model: &Model, image_shape: (usize, usize)) -> Result<TileSheet> {
    let layer = &model.layers()[0];
    tiles_from_rows(&layer.weights, &layer.bias, image_shape, None)
}

/// Each of the `top` highest-bias features followed by its most negative
/// partner; two tiles per pair, pairs laid out on a square-ish grid.
pub fn pair_tiles(model: &Model, image_shape: (usize, usize), top: usize) -> Result<TileSheet> {
    let report = pairing_report(model)?;
    let layer = &model.layers()[0];
    let base = tiles_from_rows(&layer.weights, &layer.bias, image_shape, Some(0))?;
    let mut order = Vec::new();
    for p in report.iter().take(top) {
        order.push(p.feature);
        order.push(p.partner);
    }
    let tiles = order
        .iter()
        .map(|&j| rescale_to_bytes(layer.weights.row(j)))
        .collect();
    let (rows, pair_cols) = square_grid(order.len() / 2);
    Ok(TileSheet {
        grid_rows: rows,
        grid_cols: 2 * pair_cols,
        order,
        tiles,
        ..base
    })
}

/// Negative pair of every feature, sorted by descending bias.
pub fn pairing_report(model: &Model) -> Result<Vec<NegativePair>> {
    let layer = model.require_single_layer()?;
    descending_bias_order(&layer.bias)
        .into_iter()
        .map(|j| negative_pair(model, j))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{Activation, Layer};

    fn relu_model(rows: &[&[f64]], bias: &[f64]) -> Model {
        Model::tied(vec![Layer::new(
            Matrix::from_rows(rows).unwrap(),
            bias.to_vec(),
            Activation::RectifiedLinear,
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn plane_z_equals_one() {
        let m = relu_model(&[&[0.0, 0.0, 1.0]], &[-1.0]);
        let set = hyperplanes(&m).unwrap();
        assert_eq!(set.planes[0].anchor(), vec![0.0, 0.0, 1.0]);
        assert_eq!(set.planes[0].distance_from_origin(), 1.0);
        let poly = set.planes[0].clip_to_box(&[-2.0; 3], &[2.0; 3]).unwrap();
        assert_eq!(poly.len(), 4);
        assert!(poly.iter().all(|p| p[2] == 1.0));
    }

    #[test]
    fn zero_bias_plane_through_origin() {
        let m = relu_model(&[&[1.0, 2.0, -1.0]], &[0.0]);
        let plane = &hyperplanes(&m).unwrap().planes[0];
        assert!(plane.anchor().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_feature_skipped() {
        let m = relu_model(&[&[0.0, 0.0], &[1.0, 0.0]], &[0.5, 0.0]);
        let set = hyperplanes(&m).unwrap();
        assert_eq!(set.skipped, vec![0]);
        assert_eq!(set.planes.len(), 1);
    }

    #[test]
    fn segment_clip_in_2d() {
        let m = relu_model(&[&[1.0, 0.0]], &[-0.5]);
        let seg = hyperplanes(&m).unwrap().planes[0]
            .clip_to_box(&[-1.0, -1.0], &[1.0, 1.0])
            .unwrap();
        assert_eq!(seg, vec![vec![0.5, -1.0], vec![0.5, 1.0]]);
        let miss = relu_model(&[&[1.0, 0.0]], &[-5.0]);
        assert!(hyperplanes(&miss).unwrap().planes[0]
            .clip_to_box(&[-1.0, -1.0], &[1.0, 1.0])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn hexagonal_cross_section() {
        let m = relu_model(&[&[1.0, 1.0, 1.0]], &[0.0]);
        let poly = hyperplanes(&m).unwrap().planes[0]
            .clip_to_box(&[-1.0; 3], &[1.0; 3])
            .unwrap();
        assert_eq!(poly.len(), 6);
    }

    #[test]
    fn single_feature_grid() {
        let m = relu_model(&[&[1.0, 0.0]], &[0.0]);
        let g = response_grid(&m, [(-1.0, 1.0), (0.0, 0.0)], [3, 1], GridMode::Sum).unwrap();
        assert_eq!(g.values, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn dead_model_grid_is_zero() {
        let m = relu_model(&[&[0.0, 0.0], &[0.0, 0.0]], &[0.0, 0.0]);
        let g = response_grid(&m, [(-3.0, 3.0), (-3.0, 3.0)], [7, 5], GridMode::Sum).unwrap();
        assert!(g.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn grid_rejects_non_2d() {
        let m = relu_model(&[&[1.0, 0.0, 0.0]], &[0.0]);
        assert!(response_grid(&m, [(0.0, 1.0), (0.0, 1.0)], [2, 2], GridMode::Sum).is_err());
    }

    #[test]
    fn constant_tile_is_mid_gray() {
        assert_eq!(rescale_to_bytes(&[0.3; 4]), vec![128; 4]);
    }

    #[test]
    fn one_hot_tile() {
        let m = relu_model(&[&[1.0, 0.0, 0.0, 0.0]], &[0.0]);
        let sheet = feature_tiles(&m, (2, 2)).unwrap();
        assert_eq!(sheet.tiles[0], vec![255, 0, 0, 0]);
        let img = sheet.composite(1, 0);
        assert_eq!((img.width, img.height), (2, 2));
        assert_eq!(img.pixels, vec![255, 0, 0, 0]);
        assert!(feature_tiles(&m, (3, 2)).is_err());
    }

    #[test]
    fn tiles_sorted_by_bias() {
        let m = relu_model(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]], &[0.1, 0.5, 0.3]);
        let sheet = feature_tiles(&m, (1, 2)).unwrap();
        assert_eq!(sheet.order, vec![1, 2, 0]);
        assert_eq!((sheet.grid_rows, sheet.grid_cols), (2, 2));
        let img = sheet.composite(1, 7);
        assert_eq!((img.width, img.height), (5, 3));
    }

    #[test]
    fn pairing_report_antipodes() {
        let m = relu_model(&[&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]], &[0.0, 0.2, 0.1]);
        let r = pairing_report(&m).unwrap();
        assert_eq!(r.iter().map(|p| p.feature).collect::<Vec<_>>(), vec![1, 2, 0]);
        assert_eq!(r[0].partner, 0);
        assert_eq!(r[0].cosine, -1.0);
        // v = e2 is orthogonal to both; lowest index wins
        assert_eq!((r[1].partner, r[1].dot), (0, 0.0));
        let eye = relu_model(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0]);
        assert!(pairing_report(&eye).unwrap().iter().all(|p| p.dot == 0.0));
    }

    #[test]
    fn pair_tiles_interleave() {
        let m = relu_model(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]], &[0.4, 0.3, 0.2, 0.1]);
        let sheet = pair_tiles(&m, (1, 2), 2).unwrap();
        assert_eq!(sheet.order, vec![0, 1, 1, 0]);
        assert_eq!(sheet.grid_cols % 2, 0);
    }
}
