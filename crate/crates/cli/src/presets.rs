//! Parsing of `--surface` and `--res` arguments.

use duni_core::mesh::MeshMetric;
use duni_core::surfaces::{
    sample_genus2_mesh, sample_torus_mesh, ConformalTorus, SurfaceError, OCTAGON_MIN_SUBDIVISION,
};

pub enum SurfacePreset {
    Torus(ConformalTorus),
    Genus2 { amplitude: f64 },
}

impl SurfacePreset {
    pub fn generate_mesh(&self, resolution: usize) -> Result<MeshMetric, SurfaceError> {
        match self {
            SurfacePreset::Torus(torus) => {
                Ok(sample_torus_mesh(torus, resolution, &Default::default())?.0)
            }
            SurfacePreset::Genus2 { .. } => sample_genus2_mesh(resolution, None),
        }
    }
}

/// `torus:amp=0.05[,beta=0.01]` or `genus2[:amp=0.05]`.
pub fn parse_surface(text: &str) -> Result<SurfacePreset, String> {
    let (name, params) = match text.split_once(':') {
        Some((n, p)) => (n, p),
        None => (text, ""),
    };
    let mut amp = 0.0f64;
    let mut beta = 0.0f64;
    for part in params.split(',').filter(|s| !s.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("malformed surface parameter '{part}'"))?;
        let value: f64 = value
            .parse()
            .map_err(|_| format!("'{value}' is not a number in '{part}'"))?;
        match key {
            "amp" | "alpha" => amp = value,
            "beta" => beta = value,
            _ => return Err(format!("unknown surface parameter '{key}'")),
        }
    }
    match name {
        "torus" => Ok(SurfacePreset::Torus(ConformalTorus::new(amp, beta))),
        "genus2" => Ok(SurfacePreset::Genus2 { amplitude: if amp == 0.0 { 0.05 } else { amp } }),
        other => Err(format!("unknown surface '{other}' (expected torus or genus2)")),
    }
}

/// Comma-separated resolutions. `k0`, `k0+1`, ... resolve against the
/// minimum genus-2 subdivision level.
pub fn parse_resolutions(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .filter(|s| !s.is_empty())
        .map(|tok| {
            let tok = tok.trim();
            if let Some(rest) = tok.strip_prefix("k0") {
                let offset: usize = if rest.is_empty() {
                    0
                } else {
                    rest.strip_prefix('+')
                        .and_then(|o| o.parse().ok())
                        .ok_or_else(|| format!("bad resolution token '{tok}'"))?
                };
                Ok(OCTAGON_MIN_SUBDIVISION + offset)
            } else {
                tok.parse()
                    .map_err(|_| format!("bad resolution token '{tok}'"))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_specs_parse() {
        assert!(matches!(parse_surface("torus:amp=0.05"), Ok(SurfacePreset::Torus(t)) if t.alpha == 0.05));
        assert!(matches!(parse_surface("torus:amp=0.05,beta=0.01"), Ok(SurfacePreset::Torus(t)) if t.beta == 0.01));
        assert!(matches!(parse_surface("genus2"), Ok(SurfacePreset::Genus2 { .. })));
        assert!(parse_surface("sphere").is_err());
        assert!(parse_surface("torus:amp=x").is_err());
    }

    #[test]
    fn resolutions_parse() {
        assert_eq!(parse_resolutions("8,16,32").unwrap(), vec![8, 16, 32]);
        assert_eq!(
            parse_resolutions("k0,k0+1").unwrap(),
            vec![OCTAGON_MIN_SUBDIVISION, OCTAGON_MIN_SUBDIVISION + 1]
        );
        assert!(parse_resolutions("k0-1").is_err());
        assert!(parse_resolutions("abc").is_err());
    }
}
