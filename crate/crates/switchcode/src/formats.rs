//! Text and binary artifact formats. Writers return bytes so callers can
//! hash them before anything touches the disk.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use switchcode_core::idx::{self, MnistData};
use switchcode_core::viz::{GrayImage, PlaneSet, ResponseGrid};
use switchcode_core::{Dataset, LassoSolution, Matrix, NegativePair, Source, TrainReport};

use crate::error::{Error, Result};

/// 17 significant digits: enough for every `f64` to survive a round trip.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_bytes<F>(header: &[String], mut rows: F) -> Result<Vec<u8>>
where
    F: FnMut(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_error)?;
    rows(&mut w).map_err(csv_error)?;
    w.into_inner().map_err(|e| Error::Data(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn dataset_csv(data: &Dataset) -> Result<Vec<u8>> {
    csv_bytes(&numbered("x", data.dim()), |w| {
        for row in data.rows() {
            w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
        }
        Ok(())
    })
}

/// Parses a header row followed by numeric rows of equal width.
pub fn parse_matrix_csv(bytes: &[u8], what: &str) -> Result<Matrix> {
    let mut r = csv::Reader::from_reader(bytes);
    let width = r.headers().map_err(csv_error)?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != width {
            return Err(Error::Data(format!(
                "{what}: row {} has {} fields, header has {width}",
                i + 1,
                rec.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Data(format!("{what}: row {} column {j}: not a number: {field:?}", i + 1))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(Matrix::from_vec(rows, width, data)?)
}

pub fn parse_dataset_csv(bytes: &[u8]) -> Result<Dataset> {
    let m = parse_matrix_csv(bytes, "dataset")?;
    Ok(Dataset::new(m, Source::File, None)?)
}

/// Reads a dataset from CSV, or from an IDX file (u8 images or f64 rows)
/// when the first two bytes are zero.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() >= 4 && bytes[0] == 0 && bytes[1] == 0 {
        return match bytes[2] {
            idx::DTYPE_U8 => Ok(idx::decode_images(&bytes)?),
            idx::DTYPE_F64 => Ok(idx::decode_f64(&bytes)?),
            t => Err(Error::Data(format!("{}: unsupported IDX element type 0x{t:02x}", path.display()))),
        };
    }
    parse_dataset_csv(&bytes)
}

/// Reads an IDX image file and an optional label file.
pub fn load_mnist_idx(images: &Path, labels: Option<&Path>) -> Result<MnistData> {
    let img = fs::read(images).map_err(|e| Error::io(images, e))?;
    let lab = match labels {
        Some(p) => Some(fs::read(p).map_err(|e| Error::io(p, e))?),
        None => None,
    };
    Ok(idx::decode_mnist(&img, lab.as_deref())?)
}

/// Binary PGM, maxval 255.
pub fn pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

/// Each plane clipped to the box `[lo, hi]` as one OBJ polygon, grouped by
/// feature. Planes that miss the box are listed in a comment.
pub fn planes_obj(planes: &PlaneSet, lo: &[f64], hi: &[f64]) -> Result<String> {
    let mut out = String::from("# feature hyperplanes clipped to the data bounding box\n");
    let mut vertex = 0usize;
    let mut missed = Vec::new();
    for p in &planes.planes {
        let poly = p.clip_to_box(lo, hi)?;
        if poly.len() < 3 {
            missed.push(p.feature);
            continue;
        }
        let _ = writeln!(out, "o feature_{}", p.feature);
        for v in &poly {
            let coords: Vec<String> = v.iter().map(|c| fmt_f64(*c)).collect();
            let _ = writeln!(out, "v {}", coords.join(" "));
        }
        let face: Vec<String> = (1..=poly.len()).map(|i| (vertex + i).to_string()).collect();
        let _ = writeln!(out, "f {}", face.join(" "));
        vertex += poly.len();
    }
    if !missed.is_empty() {
        let _ = writeln!(out, "# outside box: {missed:?}");
    }
    if !planes.skipped.is_empty() {
        let _ = writeln!(out, "# zero normal: {:?}", planes.skipped);
    }
    Ok(out)
}

/// 2D switching lines clipped to the box as `feature,x0,y0,x1,y1` rows.
pub fn segments_csv(planes: &PlaneSet, lo: &[f64], hi: &[f64]) -> Result<Vec<u8>> {
    let header: Vec<String> = ["feature", "x0", "y0", "x1", "y1"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for p in &planes.planes {
        let seg = p.clip_to_box(lo, hi)?;
        if seg.len() == 2 {
            rows.push((p.feature, seg));
        }
    }
    csv_bytes(&header, |w| {
        for (f, seg) in &rows {
            let mut rec = vec![f.to_string()];
            rec.extend(seg.iter().flatten().map(|v| fmt_f64(*v)));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn grid_csv(grid: &ResponseGrid) -> Result<Vec<u8>> {
    let header: Vec<String> = ["x", "y", "value"].map(String::from).to_vec();
    csv_bytes(&header, |w| {
        for iy in 0..grid.resolution[1] {
            for ix in 0..grid.resolution[0] {
                let [x, y] = grid.point(ix, iy);
                w.write_record([fmt_f64(x), fmt_f64(y), fmt_f64(grid.value(ix, iy))])?;
            }
        }
        Ok(())
    })
}

pub fn report_csv(report: &TrainReport) -> Result<Vec<u8>> {
    let header: Vec<String> = ["epoch", "loss", "sparsity"].map(String::from).to_vec();
    csv_bytes(&header, |w| {
        for (e, (l, s)) in report.loss_history.iter().zip(&report.sparsity_history).enumerate() {
            w.write_record([(e + 1).to_string(), fmt_f64(*l), fmt_f64(*s)])?;
        }
        Ok(())
    })
}

/// Codes as `h0..h{k-1}` with optional lasso convergence columns.
pub fn codes_csv(codes: &[Vec<f64>], lasso: Option<&[LassoSolution]>) -> Result<Vec<u8>> {
    let k = codes.first().map_or(0, Vec::len);
    let mut header = numbered("h", k);
    if lasso.is_some() {
        header.push("converged".into());
        header.push("iterations".into());
    }
    csv_bytes(&header, |w| {
        for (i, h) in codes.iter().enumerate() {
            let mut rec: Vec<String> = h.iter().map(|v| fmt_f64(*v)).collect();
            if let Some(sol) = lasso {
                rec.push(sol[i].converged.to_string());
                rec.push(sol[i].iterations.to_string());
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

#[derive(Debug, Serialize)]
struct PairRecord {
    feature: usize,
    partner: usize,
    bias: f64,
    dot: f64,
    cosine: f64,
}

/// Pairing report as a JSON array, in report order (descending bias).
pub fn pairing_json(pairs: &[NegativePair], bias: &[f64]) -> Result<Vec<u8>> {
    let records: Vec<PairRecord> = pairs
        .iter()
        .map(|p| PairRecord {
            feature: p.feature,
            partner: p.partner,
            bias: bias[p.feature],
            dot: p.dot,
            cosine: p.cosine,
        })
        .collect();
    to_json_bytes(&records)
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use switchcode_core::viz::{hyperplanes, response_grid, GridMode};
    use switchcode_core::{Activation, Layer, Model};

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = [[0.1, -1.0 / 3.0], [f64::MIN_POSITIVE, 1e300], [std::f64::consts::PI, -0.0]];
        let d = Dataset::from_rows(&rows).unwrap();
        let bytes = dataset_csv(&d).unwrap();
        assert!(bytes.starts_with(b"x0,x1\n"));
        let back = parse_dataset_csv(&bytes).unwrap();
        for (a, b) in back.samples().as_slice().iter().zip(d.samples().as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_rejects_ragged_and_text() {
        assert!(matches!(parse_dataset_csv(b"x0,x1\n1,2\n3\n"), Err(Error::Data(_))));
        assert!(matches!(parse_dataset_csv(b"x0\nabc\n"), Err(Error::Data(_))));
        assert!(parse_dataset_csv(b"x0\n").is_err());
    }

    #[test]
    fn pgm_header() {
        let img = GrayImage {
            width: 3,
            height: 2,
            pixels: vec![0, 1, 2, 3, 4, 255],
        };
        let b = pgm(&img);
        assert_eq!(&b[..11], b"P5\n3 2\n255\n");
        assert_eq!(&b[11..], &[0, 1, 2, 3, 4, 255]);
    }

    #[test]
    fn obj_for_horizontal_plane() {
        let l = Layer::new(Matrix::from_rows(&[[0.0, 0.0, 1.0]]).unwrap(), vec![-1.0], Activation::RectifiedLinear)
            .unwrap();
        let m = Model::tied(vec![l]).unwrap();
        let obj = planes_obj(&hyperplanes(&m).unwrap(), &[-2.0; 3], &[2.0; 3]).unwrap();
        let verts: Vec<&str> = obj.lines().filter(|l| l.starts_with("v ")).collect();
        assert_eq!(verts.len(), 4);
        for v in verts {
            let z: f64 = v.split(' ').nth(3).unwrap().parse().unwrap();
            assert_eq!(z, 1.0);
        }
        assert!(obj.contains("f 1 2 3 4"));
    }

    #[test]
    fn grid_rows_follow_lattice() {
        let l = Layer::new(Matrix::from_rows(&[[1.0, 0.0]]).unwrap(), vec![0.0], Activation::RectifiedLinear).unwrap();
        let m = Model::tied(vec![l]).unwrap();
        let g = response_grid(&m, [(-1.0, 1.0), (0.0, 0.0)], [3, 1], GridMode::Sum).unwrap();
        let text = String::from_utf8(grid_csv(&g).unwrap()).unwrap();
        let values: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(values, vec![0.0, 0.0, 1.0]);
    }
}
