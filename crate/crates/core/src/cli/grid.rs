use std::fmt;
use std::str::FromStr;

/// `START:STOP:COUNT[:log]`: `COUNT` points from `START` to `STOP`, evenly
/// spaced or geometrically spaced with `:log`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                if i == 0 {
                    self.start
                } else if i + 1 == self.count {
                    self.stop
                } else if self.log {
                    (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + t * (self.stop - self.start)
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let log = match parts.len() {
            3 => false,
            4 if parts[3] == "log" => true,
            4 => return Err(format!("unknown grid spacing '{}', expected 'log'", parts[3])),
            _ => return Err(format!("grid '{s}' is not START:STOP:COUNT[:log]")),
        };
        let num = |v: &str| v.parse::<f64>().map_err(|e| format!("bad number '{v}': {e}"));
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2].parse().map_err(|e| format!("bad count '{}': {e}", parts[2]))?;
        if count == 0 {
            return Err("grid count must be positive".into());
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err("grid bounds must be finite".into());
        }
        if count > 1 && !(stop > start) {
            return Err(format!("grid must increase: {start} to {stop}"));
        }
        if log && !(start > 0.0) {
            return Err("log grid needs a positive start".into());
        }
        Ok(GridSpec { start, stop, count, log })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}{}", self.start, self.stop, self.count, if self.log { ":log" } else { "" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_log() {
        let g: GridSpec = "0:1.5:4".parse().unwrap();
        assert_eq!(g.values(), vec![0.0, 0.5, 1.0, 1.5]);
        let g: GridSpec = "0.01:1:3:log".parse().unwrap();
        let v = g.values();
        assert_eq!(v[0], 0.01);
        assert!((v[1] - 0.1).abs() < 1e-15);
        assert_eq!(v[2], 1.0);
        assert_eq!("0.3:0.3:1".parse::<GridSpec>().unwrap().values(), vec![0.3]);
    }

    #[test]
    fn rejects_bad_specs() {
        for s in ["1:0:3", "0:1", "0:1:0", "0:1:3:lin", "0:1:3:log", "a:1:2"] {
            assert!(s.parse::<GridSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn display_round_trips() {
        let g: GridSpec = "0.05:1:20:log".parse().unwrap();
        assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
    }
}
