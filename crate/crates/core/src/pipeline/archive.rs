//! Model archive: a magic line followed by the sections META, THETA_H,
//! THETA_M and P, in that order. Each section is a header line
//! `SECTION <name> <byte length>` and its payload. META is `key=value` text;
//! the matrices are raw_f64 blobs.

use std::path::Path;

use super::{AlignmentModel, SolverConfig, Variant};
use crate::data::io::{read_raw_prefix, write_raw_f64};
use crate::data::MinMaxScaler;
use crate::error::{Error, Result};
use crate::numerics::Mat;
use crate::scalar::Scalar;
use crate::solvers::AdmmSchedule;

pub const ARCHIVE_MAGIC: &str = "LEMA-ARCHIVE 1";

const SECTIONS: [&str; 4] = ["META", "THETA_H", "THETA_M", "P"];

fn to_f64<T: Scalar>(m: &Mat<T>) -> Mat<f64> {
    m.map(|x| x.as_f64())
}

fn from_f64<T: Scalar>(m: &Mat<f64>) -> Mat<T> {
    m.map(T::of)
}

fn list<T: Scalar>(v: &[T]) -> String {
    v.iter().map(|x| format!("{:?}", x.as_f64())).collect::<Vec<_>>().join(",")
}

fn schedule_meta<T: Scalar>(out: &mut String, prefix: &str, s: &AdmmSchedule<T>) {
    for (k, v) in [("mu0", s.mu0), ("mu_max", s.mu_max), ("rho", s.rho), ("eps", s.eps)] {
        out.push_str(&format!("{prefix}.{k}={:?}\n", v.as_f64()));
    }
    out.push_str(&format!("{prefix}.max_iter={}\n", s.max_iter));
}

fn meta_text<T: Scalar>(m: &AlignmentModel<T>) -> String {
    let c = &m.config;
    let mut s = String::new();
    let f = |x: T| format!("{:?}", x.as_f64());
    s.push_str(&format!("variant={}\n", m.variant));
    s.push_str(&format!("n_classes={}\n", m.n_classes));
    s.push_str(&format!("d={}\n", c.d));
    s.push_str(&format!("d_h={}\n", m.theta_h.ncols()));
    s.push_str(&format!("d_m={}\n", m.theta_m.ncols()));
    s.push_str(&format!("alpha={}\n", f(c.alpha)));
    s.push_str(&format!("beta={}\n", f(c.beta)));
    s.push_str(&format!("gamma={}\n", c.gamma.map_or("default".into(), f)));
    s.push_str(&format!("s_scale={}\n", f(c.s_scale)));
    s.push_str(&format!("cap={}\n", c.cap.map_or("default".into(), f)));
    s.push_str(&format!("zeta={}\n", f(c.zeta)));
    s.push_str(&format!("max_outer={}\n", c.max_outer));
    s.push_str(&format!("seed={}\n", c.seed));
    schedule_meta(&mut s, "theta_admm", &c.theta_schedule);
    schedule_meta(&mut s, "w_admm", &c.w_schedule);
    s.push_str(&format!("outer_iters={}\n", m.outer_iters));
    s.push_str(&format!("converged={}\n", m.converged));
    s.push_str(&format!("objective_trace={}\n", list(&m.objective_trace)));
    for (name, sc) in [("scaler_h", &m.scaler_h), ("scaler_m", &m.scaler_m)] {
        if let Some(sc) = sc {
            s.push_str(&format!("{name}.lo={}\n", list(&sc.lo)));
            s.push_str(&format!("{name}.hi={}\n", list(&sc.hi)));
            s.push_str(&format!("{name}.shift={}\n", list(&sc.shift)));
        }
    }
    s
}

/// Serializes a model to bytes. Output is a pure function of the model.
pub fn write_model<T: Scalar>(model: &AlignmentModel<T>) -> Vec<u8> {
    let payloads = [
        meta_text(model).into_bytes(),
        write_raw_f64(&to_f64(&model.theta_h)),
        write_raw_f64(&to_f64(&model.theta_m)),
        write_raw_f64(&to_f64(&model.p)),
    ];
    let mut out = format!("{ARCHIVE_MAGIC}\n").into_bytes();
    for (name, body) in SECTIONS.iter().zip(payloads) {
        out.extend_from_slice(format!("SECTION {name} {}\n", body.len()).as_bytes());
        out.extend_from_slice(&body);
    }
    out
}

pub fn save_model<T: Scalar>(path: &Path, model: &AlignmentModel<T>) -> Result<()> {
    std::fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<AlignmentModel<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes, path)
}

fn take_line<'a>(bytes: &'a [u8], pos: &mut usize, origin: &Path) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::parse(origin, 0, "unexpected end of archive"))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end]).map_err(|_| Error::parse(origin, 0, "non-UTF-8 header"))
}

struct Meta<'a> {
    pairs: Vec<(usize, &'a str, &'a str)>,
    origin: &'a Path,
}

impl<'a> Meta<'a> {
    fn raw(&self, key: &str) -> Result<(usize, &'a str)> {
        self.pairs
            .iter()
            .find(|(_, k, _)| *k == key)
            .map(|&(l, _, v)| (l, v))
            .ok_or_else(|| Error::parse(self.origin, 0, format!("META lacks '{key}'")))
    }

    fn opt(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(_, k, _)| *k == key).map(|&(_, _, v)| v)
    }

    fn get<V: std::str::FromStr>(&self, key: &str) -> Result<V> {
        let (line, v) = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::parse(self.origin, line, format!("bad value for '{key}': {v}")))
    }

    fn real<T: Scalar>(&self, key: &str) -> Result<T> {
        Ok(T::of(self.get::<f64>(key)?))
    }

    fn opt_real<T: Scalar>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key)?.1 {
            "default" => Ok(None),
            _ => self.real(key).map(Some),
        }
    }

    fn list<T: Scalar>(&self, v: &str, key: &str) -> Result<Vec<T>> {
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|x| {
                x.parse::<f64>()
                    .map(T::of)
                    .map_err(|_| Error::parse(self.origin, 0, format!("bad number in '{key}'")))
            })
            .collect()
    }

    fn schedule<T: Scalar>(&self, prefix: &str) -> Result<AdmmSchedule<T>> {
        Ok(AdmmSchedule {
            mu0: self.real(&format!("{prefix}.mu0"))?,
            mu_max: self.real(&format!("{prefix}.mu_max"))?,
            rho: self.real(&format!("{prefix}.rho"))?,
            eps: self.real(&format!("{prefix}.eps"))?,
            max_iter: self.get(&format!("{prefix}.max_iter"))?,
        })
    }

    fn scaler<T: Scalar>(&self, name: &str) -> Result<Option<MinMaxScaler<T>>> {
        let key = |part: &str| format!("{name}.{part}");
        match (self.opt(&key("lo")), self.opt(&key("hi")), self.opt(&key("shift"))) {
            (Some(lo), Some(hi), Some(shift)) => {
                let sc = MinMaxScaler {
                    lo: self.list(lo, &key("lo"))?,
                    hi: self.list(hi, &key("hi"))?,
                    shift: self.list(shift, &key("shift"))?,
                };
                if sc.hi.len() != sc.lo.len() || sc.shift.len() != sc.lo.len() {
                    return Err(Error::parse(self.origin, 0, format!("{name} lists differ in length")));
                }
                Ok(Some(sc))
            }
            (None, None, None) => Ok(None),
            _ => Err(Error::parse(self.origin, 0, format!("incomplete {name}"))),
        }
    }
}

pub fn read_model<T: Scalar>(bytes: &[u8], origin: &Path) -> Result<AlignmentModel<T>> {
    let mut pos = 0;
    if take_line(bytes, &mut pos, origin)? != ARCHIVE_MAGIC {
        return Err(Error::parse(origin, 1, "not a model archive"));
    }
    let mut bodies: Vec<&[u8]> = Vec::with_capacity(4);
    for expected in SECTIONS {
        let header = take_line(bytes, &mut pos, origin)?;
        let parts: Vec<&str> = header.split(' ').collect();
        let len = match parts.as_slice() {
            ["SECTION", name, len] if *name == expected => len
                .parse::<usize>()
                .map_err(|_| Error::parse(origin, 0, format!("bad length in '{header}'")))?,
            _ => {
                return Err(Error::parse(
                    origin,
                    0,
                    format!("expected section {expected}, found '{header}'"),
                ))
            }
        };
        let end = pos
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::parse(origin, 0, format!("section {expected} truncated")))?;
        bodies.push(&bytes[pos..end]);
        pos = end;
    }
    if pos != bytes.len() {
        return Err(Error::parse(origin, 0, "trailing bytes after last section"));
    }

    let text = std::str::from_utf8(bodies[0]).map_err(|_| Error::parse(origin, 0, "META is not UTF-8"))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(origin, i + 1, format!("META line without '=': {line}")))?;
        pairs.push((i + 1, k, v));
    }
    let meta = Meta { pairs, origin };

    let mat = |b: &[u8], name: &str| -> Result<Mat<T>> {
        let (m, used) = read_raw_prefix(b, origin)?;
        if used != b.len() {
            return Err(Error::parse(origin, 0, format!("section {name} has trailing bytes")));
        }
        Ok(from_f64(&m))
    };
    let theta_h = mat(bodies[1], "THETA_H")?;
    let theta_m = mat(bodies[2], "THETA_M")?;
    let p = mat(bodies[3], "P")?;

    let config = SolverConfig {
        alpha: meta.real("alpha")?,
        beta: meta.real("beta")?,
        gamma: meta.opt_real("gamma")?,
        d: meta.get("d")?,
        s_scale: meta.real("s_scale")?,
        cap: meta.opt_real("cap")?,
        zeta: meta.real("zeta")?,
        max_outer: meta.get("max_outer")?,
        theta_schedule: meta.schedule("theta_admm")?,
        w_schedule: meta.schedule("w_admm")?,
        seed: meta.get("seed")?,
    };
    let model = AlignmentModel {
        variant: meta.get::<String>("variant")?.parse::<Variant>()?,
        n_classes: meta.get("n_classes")?,
        objective_trace: meta.list(meta.raw("objective_trace")?.1, "objective_trace")?,
        outer_iters: meta.get("outer_iters")?,
        converged: meta.get("converged")?,
        scaler_h: meta.scaler("scaler_h")?,
        scaler_m: meta.scaler("scaler_m")?,
        theta_h,
        theta_m,
        p,
        config,
    };
    let (d, dh, dm): (usize, usize, usize) = (meta.get("d")?, meta.get("d_h")?, meta.get("d_m")?);
    if model.theta_h.shape() != (d, dh)
        || model.theta_m.shape() != (d, dm)
        || model.p.shape() != (model.n_classes, d)
    {
        return Err(Error::parse(origin, 0, "matrix shapes disagree with META"));
    }
    for (sc, n) in [(&model.scaler_h, dh), (&model.scaler_m, dm)] {
        if sc.as_ref().is_some_and(|sc| sc.lo.len() != n) {
            return Err(Error::parse(origin, 0, "scaler length disagrees with META"));
        }
    }
    Ok(model)
}
