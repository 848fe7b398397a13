//! CSV output for angle paths and the `(alpha, beta)` trace heatmap.

use std::f64::consts::FRAC_PI_2;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{trace_t, AnglePath, INV_SQRT_6};
use crate::error::{Error, Result};
use crate::lambda::Lambda;
use crate::profile1d::Grid1D;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnglePathHeader {
    pub schema_version: u32,
    pub grid: Grid1D,
    pub v3: f64,
    pub lambda: Lambda,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
}

pub fn write_angle_path_csv<W: Write>(out: &mut W, path: &AnglePath, header: &AnglePathHeader) -> Result<()> {
    writeln!(out, "# {}", serde_json::to_string(header)?)?;
    writeln!(out, "t,alpha,beta,N")?;
    for (i, t) in path.grid.nodes().iter().enumerate() {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            t, path.alpha[i], path.beta[i], path.amplitude[i]
        )?;
    }
    Ok(())
}

pub fn read_angle_path_csv<R: BufRead>(input: R) -> Result<(AnglePathHeader, AnglePath)> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty angle path file".into()))??;
    let json = first
        .strip_prefix("# ")
        .ok_or_else(|| Error::Parse("missing JSON header line".into()))?;
    let header: AnglePathHeader = serde_json::from_str(json)?;
    let cols = lines.next().ok_or_else(|| Error::Parse("missing column line".into()))??;
    if cols.trim() != "t,alpha,beta,N" {
        return Err(Error::Parse(format!("unexpected columns {cols:?}")));
    }
    let (mut alpha, mut beta, mut amplitude) = (Vec::new(), Vec::new(), Vec::new());
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
        let [_, a, b, n] = nums[..] else {
            return Err(Error::Parse(format!("row {row}: expected 4 columns, got {}", nums.len())));
        };
        alpha.push(a);
        beta.push(b);
        amplitude.push(n);
    }
    let path = AnglePath::new(header.grid, alpha, beta, amplitude)?;
    Ok((header, path))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbmapCell {
    pub alpha: f64,
    pub beta: f64,
    pub t_value: f64,
    /// `|T| = 1/sqrt(6)` within `1e-6`, i.e. `Q*` is uniaxial.
    pub uniaxial: bool,
}

/// `T(alpha, beta; v3)` on a `res x res` grid of `[-pi/2, pi/2]^2`, alpha varying fastest.
pub fn abmap(v3: f64, res: usize) -> Result<Vec<AbmapCell>> {
    if res < 2 {
        return Err(Error::InvalidArgument(format!("heatmap resolution {res} must be at least 2")));
    }
    if !(v3.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("v3 = {v3} must satisfy |v3| < 1")));
    }
    let at = |k: usize| -FRAC_PI_2 + std::f64::consts::PI * k as f64 / (res - 1) as f64;
    Ok((0..res)
        .flat_map(|j| (0..res).map(move |i| (at(i), at(j))))
        .map(|(alpha, beta)| {
            let t_value = trace_t(alpha, beta, v3);
            AbmapCell { alpha, beta, t_value, uniaxial: (t_value.abs() - INV_SQRT_6).abs() < 1e-6 }
        })
        .collect())
}

pub fn write_abmap_csv<W: Write>(out: &mut W, cells: &[AbmapCell]) -> Result<()> {
    writeln!(out, "alpha,beta,T_value,uniaxial_flag")?;
    for c in cells {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{}", c.alpha, c.beta, c.t_value, u8::from(c.uniaxial))?;
    }
    Ok(())
}
