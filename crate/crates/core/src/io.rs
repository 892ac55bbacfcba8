//! OBJ / OFF mesh files and the JSON run report.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimal::Mode;
use crate::tiling::{MeshPatch, Region};

/// `%.9g`-style formatting: nine significant digits, trailing zeros trimmed.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.8e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    /// `.off` (any case) selects OFF, everything else OBJ.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("off") => MeshFormat::Off,
            _ => MeshFormat::Obj,
        }
    }
}

/// Plain indexed triangle mesh as read back from disk.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl From<&MeshPatch> for TriMesh {
    fn from(p: &MeshPatch) -> Self {
        Self {
            vertices: p.vertices.clone(),
            triangles: p.triangles.clone(),
        }
    }
}

pub fn write_obj<W: Write>(mut w: W, vertices: &[[f64; 3]], triangles: &[[usize; 3]]) -> io::Result<()> {
    for v in vertices {
        writeln!(w, "v {} {} {}", fmt_sig9(v[0]), fmt_sig9(v[1]), fmt_sig9(v[2]))?;
    }
    for t in triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()
}

pub fn write_off<W: Write>(mut w: W, vertices: &[[f64; 3]], triangles: &[[usize; 3]]) -> io::Result<()> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", vertices.len(), triangles.len())?;
    for v in vertices {
        writeln!(w, "{} {} {}", fmt_sig9(v[0]), fmt_sig9(v[1]), fmt_sig9(v[2]))?;
    }
    for t in triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    w.flush()
}

pub fn write_mesh(path: &Path, patch: &MeshPatch) -> io::Result<()> {
    let file = BufWriter::new(fs::File::create(path)?);
    match MeshFormat::from_path(path) {
        MeshFormat::Obj => write_obj(file, &patch.vertices, &patch.triangles),
        MeshFormat::Off => write_off(file, &patch.vertices, &patch.triangles),
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedMesh(msg.into())
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| malformed(format!("line {line}: missing coordinate")))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| malformed(format!("line {line}: bad number {tok:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(malformed(format!("line {line}: non-finite coordinate")))
    }
}

fn check(mesh: TriMesh) -> Result<TriMesh> {
    if mesh.triangles.is_empty() {
        return Err(malformed("mesh has no triangles"));
    }
    let n = mesh.vertices.len();
    if let Some(t) = mesh.triangles.iter().find(|t| t.iter().any(|&k| k >= n)) {
        return Err(malformed(format!("face {t:?} references a missing vertex")));
    }
    Ok(mesh)
}

pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut mesh = TriMesh::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("v") => {
                let v = [
                    parse_f64(toks.next(), line)?,
                    parse_f64(toks.next(), line)?,
                    parse_f64(toks.next(), line)?,
                ];
                mesh.vertices.push(v);
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        match head.parse::<usize>() {
                            Ok(k) if k >= 1 => Ok(k - 1),
                            _ => Err(malformed(format!("line {line}: bad face index {t:?}"))),
                        }
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(malformed(format!("line {line}: only triangles are supported")));
                }
                mesh.triangles.push([idx[0], idx[1], idx[2]]);
            }
            Some(tok) if tok.starts_with('#') => {}
            // normals, texture coordinates, groups etc. carry no geometry we audit
            Some("vn" | "vt" | "g" | "o" | "s" | "usemtl" | "mtllib") | None => {}
            Some(other) => return Err(malformed(format!("line {line}: unknown record {other:?}"))),
        }
    }
    check(mesh)
}

pub fn parse_off(text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| malformed("empty file"))?;
    let mut header_toks = header.split_whitespace();
    if header_toks.next() != Some("OFF") {
        return Err(malformed("missing OFF header"));
    }
    // counts may share the header line
    let rest: Vec<&str> = header_toks.collect();
    let counts: Vec<&str> = if rest.is_empty() {
        let (_, l) = lines.next().ok_or_else(|| malformed("missing counts"))?;
        l.split_whitespace().collect()
    } else {
        rest
    };
    let count = |k: usize| -> Result<usize> {
        counts
            .get(k)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| malformed("bad counts line"))
    };
    let (nv, nf) = (count(0)?, count(1)?);
    let mut mesh = TriMesh::default();
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| malformed("truncated vertex block"))?;
        let mut t = l.split_whitespace();
        mesh.vertices.push([
            parse_f64(t.next(), line)?,
            parse_f64(t.next(), line)?,
            parse_f64(t.next(), line)?,
        ]);
    }
    for _ in 0..nf {
        let (line, l) = lines.next().ok_or_else(|| malformed("truncated face block"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| malformed(format!("line {line}: bad index {t:?}"))))
            .collect::<Result<_>>()?;
        if idx.len() != 4 || idx[0] != 3 {
            return Err(malformed(format!("line {line}: only triangles are supported")));
        }
        mesh.triangles.push([idx[1], idx[2], idx[3]]);
    }
    check(mesh)
}

/// Reads OFF when the file starts with an `OFF` header, OBJ otherwise.
pub fn read_mesh(path: &Path) -> std::result::Result<TriMesh, ReadError> {
    let text = fs::read_to_string(path).map_err(ReadError::Io)?;
    let is_off = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.starts_with("OFF"));
    let parsed = if is_off { parse_off(&text) } else { parse_obj(&text) };
    parsed.map_err(ReadError::Mesh)
}

#[derive(Debug)]
pub enum ReadError {
    Io(io::Error),
    Mesh(Error),
}

/// JSON report written by `gen`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub eps: f64,
    pub mode: Mode,
    pub m: f64,
    pub coefficients: [f64; 6],
    pub triangle_count: usize,
    pub region: Region,
    pub empirical_density: f64,
    pub theoretical_density: f64,
    pub vertex_density: f64,
    pub sampled_max_error: f64,
    pub dz: f64,
}

impl Report {
    pub fn all_finite(&self) -> bool {
        let r = &self.region;
        [
            self.eps,
            self.m,
            self.empirical_density,
            self.theoretical_density,
            self.vertex_density,
            self.sampled_max_error,
            self.dz,
            r.xmin,
            r.ymin,
            r.xmax,
            r.ymax,
        ]
        .iter()
        .chain(self.coefficients.iter())
        .all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(-0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(-2.5), "-2.5");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(2.2307101433), "2.23071014");
        assert_eq!(fmt_sig9(123456.789123), "123456.789");
        assert_eq!(fmt_sig9(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig9(6.02214076e23), "6.02214076e23");
    }

    #[test]
    fn obj_layout() {
        let mut buf = Vec::new();
        write_obj(&mut buf, &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.5], [0.0, 1.0, -0.25]], &[[0, 1, 2]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "v 0 0 0\nv 1 0 0.5\nv 0 1 -0.25\nf 1 2 3\n");
    }

    #[test]
    fn off_layout() {
        let mut buf = Vec::new();
        write_off(&mut buf, &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.5], [0.0, 1.0, -0.25]], &[[0, 1, 2]]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "OFF\n3 1 0\n0 0 0\n1 0 0.5\n0 1 -0.25\n3 0 1 2\n"
        );
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_obj(""), Err(Error::MalformedMesh(_))));
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nf 1 2 3\n").is_err());
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3 1\n").is_err());
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n").is_err());
        assert!(parse_obj("bogus\n").is_err());
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n").is_err());
        assert!(parse_off("NOFF\n").is_err());
        assert!(parse_off("OFF\n0 0 0\n").is_err());
    }

    #[test]
    fn obj_with_slashes_and_comments() {
        let m = parse_obj("# c\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn off_counts_on_header_line() {
        let m = parse_off("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.vertices.len(), 3);
    }

    fn mesh_strategy() -> impl Strategy<Value = TriMesh> {
        (3usize..20)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec(prop::array::uniform3(-1e4f64..1e4), n),
                    prop::collection::vec(prop::array::uniform3(0..n), 1..30),
                )
            })
            .prop_map(|(vertices, triangles)| TriMesh { vertices, triangles })
    }

    proptest! {
        #[test]
        fn round_trip_within_nine_digits(mesh in mesh_strategy(), off in any::<bool>()) {
            let mut buf = Vec::new();
            if off {
                write_off(&mut buf, &mesh.vertices, &mesh.triangles).unwrap();
            } else {
                write_obj(&mut buf, &mesh.vertices, &mesh.triangles).unwrap();
            }
            let text = String::from_utf8(buf).unwrap();
            let back = if off { parse_off(&text) } else { parse_obj(&text) }.unwrap();
            prop_assert_eq!(&back.triangles, &mesh.triangles);
            for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
                for k in 0..3 {
                    prop_assert!((a[k] - b[k]).abs() <= 1e-8 * b[k].abs().max(1e-300) + 1e-300);
                }
            }
        }
    }
}
