//! CSV serialization of profiles: a `# {json}` header line followed by
//! `t,Q11,Q12,Q13,Q22,Q23` rows (`Q33 = -Q11 - Q22`).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Grid1D, Profile};
use crate::error::{Error, Result};
use crate::lambda::Lambda;
use crate::qtensor::{self, S0Tensor};
use crate::SCHEMA_VERSION;

pub const COLUMNS: [&str; 6] = ["t", "Q11", "Q12", "Q13", "Q22", "Q23"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub schema_version: u32,
    pub grid: Grid1D,
    pub lambda: Lambda,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
}

pub fn write_profile_csv<W: Write>(
    out: &mut W,
    profile: &Profile,
    lambda: Lambda,
    energy: Option<f64>,
) -> Result<()> {
    let amplitude = match profile.values() {
        super::ProfileValues::Director { amplitude, .. } => Some(*amplitude),
        super::ProfileValues::Tensor { .. } => None,
    };
    let header = ProfileHeader {
        schema_version: SCHEMA_VERSION,
        grid: *profile.grid(),
        lambda,
        mode: if amplitude.is_some() { "director" } else { "tensor" }.into(),
        amplitude,
        energy,
    };
    writeln!(out, "# {}", serde_json::to_string(&header)?)?;
    writeln!(out, "{}", COLUMNS.join(","))?;
    for (t, q) in profile.grid().nodes().iter().zip(profile.tensors()) {
        let u = q.upper();
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            t, u[0], u[1], u[2], u[3], u[4]
        )?;
    }
    Ok(())
}

pub fn read_profile_csv<R: BufRead>(input: R) -> Result<(ProfileHeader, Profile)> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty profile file".into()))??;
    let json = first
        .strip_prefix("# ")
        .ok_or_else(|| Error::Parse("missing JSON header line".into()))?;
    let header: ProfileHeader = serde_json::from_str(json)?;
    let cols = lines.next().ok_or_else(|| Error::Parse("missing column line".into()))??;
    if cols.trim() != COLUMNS.join(",") {
        return Err(Error::Parse(format!("unexpected columns {cols:?}")));
    }
    let mut values = Vec::with_capacity(header.grid.n_nodes());
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
        if nums.len() != 6 {
            return Err(Error::Parse(format!("row {row}: expected 6 columns, got {}", nums.len())));
        }
        values.push(S0Tensor::from_upper(nums[1], nums[2], nums[3], nums[4], nums[5]));
    }
    let profile = match header.amplitude {
        Some(s) if header.mode == "director" => {
            let dirs = values.iter().map(|q| qtensor::uniaxial_fit(q, s).director).collect();
            Profile::director(header.grid, dirs, s)?
        }
        _ => Profile::tensor(header.grid, values)?,
    };
    Ok((header, profile))
}
