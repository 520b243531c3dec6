//! Value parsers for command-line flags.

use std::str::FromStr;

use realized_laplace::fit::TemperedStableParams;
use realized_laplace::mc::BetaMode;

/// Evaluation points, ascending and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct UList(pub Vec<f64>);

/// `--u`: a comma list, or `grid:lo,hi,n` for `n` equispaced points.
pub fn u_list(s: &str) -> Result<UList, String> {
    let s = s.trim();
    let out: Vec<f64> = if let Some(spec) = s.strip_prefix("grid:") {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected grid:lo,hi,n, got '{s}'"));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| format!("bad grid start '{}'", parts[0]))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| format!("bad grid end '{}'", parts[1]))?;
        let n: usize = parts[2]
            .parse()
            .map_err(|_| format!("bad grid size '{}'", parts[2]))?;
        if n < 2 || hi <= lo {
            return Err(format!("grid needs n >= 2 and hi > lo, got '{s}'"));
        }
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    } else {
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad u value '{p}'"))
            })
            .collect::<Result<_, _>>()?
    };
    if out.iter().any(|&u| !(u >= 0.0 && u.is_finite())) {
        return Err("u values must be finite and non-negative".into());
    }
    if out.windows(2).any(|w| w[1] <= w[0]) {
        return Err("u values must be strictly ascending".into());
    }
    Ok(UList(out))
}

/// `--init a,c,l`.
pub fn theta(s: &str) -> Result<TemperedStableParams, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number '{p}'"))
        })
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, c, l] => TemperedStableParams::new(a, c, l).map_err(|e| e.to_string()),
        _ => Err(format!("expected alpha,c,lambda, got '{s}'")),
    }
}

/// `--beta`: a value, `estimate[:days]`, or `known`-free forms of
/// [`BetaMode`]. A bare number is a fixed activity.
pub fn beta(s: &str) -> Result<BetaMode, String> {
    if let Ok(b) = s.trim().parse::<f64>() {
        return if b > 0.0 && b <= 2.0 {
            Ok(BetaMode::FixedAt(b))
        } else {
            Err(format!("activity must lie in (0,2], got {b}"))
        };
    }
    match BetaMode::from_str(s).map_err(|e| e.to_string())? {
        BetaMode::Known => Err("'known' needs a simulated path; give a value or 'estimate'".into()),
        m => Ok(m),
    }
}

/// `--kernel-umax auto|value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UMax {
    Auto,
    Value(f64),
}

pub fn u_max(s: &str) -> Result<UMax, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(UMax::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(UMax::Value(v)),
        _ => Err(format!("expected 'auto' or a positive number, got '{s}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u_forms() {
        assert_eq!(u_list("0.1, 0.5,1.25").unwrap().0, vec![0.1, 0.5, 1.25]);
        assert_eq!(
            u_list("grid:0,1,5").unwrap().0,
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert!(u_list("0.5,0.1").is_err());
        assert!(u_list("-1").is_err());
        assert!(u_list("grid:0,1").is_err());
        assert!(u_list("a,b").is_err());
    }

    #[test]
    fn beta_forms() {
        assert_eq!(beta("1.7").unwrap(), BetaMode::FixedAt(1.7));
        assert_eq!(beta("2").unwrap(), BetaMode::FixedAt(2.0));
        assert_eq!(
            beta("estimate").unwrap(),
            BetaMode::Estimated { days: 252.0 }
        );
        assert_eq!(
            beta("estimate:20").unwrap(),
            BetaMode::Estimated { days: 20.0 }
        );
        assert!(beta("2.5").is_err());
        assert!(beta("known").is_err());
    }

    #[test]
    fn theta_and_umax() {
        assert_eq!(theta("0.3,1.2,0.05").unwrap().as_array(), [0.3, 1.2, 0.05]);
        assert!(theta("0.3,1.2").is_err());
        assert!(theta("1.3,1.2,0.05").is_err());
        assert_eq!(u_max("auto").unwrap(), UMax::Auto);
        assert_eq!(u_max("2.5").unwrap(), UMax::Value(2.5));
        assert!(u_max("0").is_err());
    }
}
