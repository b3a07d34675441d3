//! Plain-text system description.
//!
//! ```text
//! # comments run to end of line
//! rule = state-sign      # state-sign | time-pulse | crisp-state-sign | crisp-time-pulse
//! delta = 10
//! degree = 100
//! composed = false
//!
//! [subsystem]
//! -1 1
//! -1 -3
//!
//! [subsystem]
//! window = 0.2:0.4       # time rules only; comma-separated t0:t1 pairs
//! matrix = [[0.01, 3], [-1, -4]]
//! ```
//!
//! A matrix is either a `matrix = ` nested list or bare rows of
//! whitespace-separated reals, one row per line.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::switched::{LinearSubsystem, SwitchedSystem, SwitchingRule, SystemError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing `{0}` entry")]
    Missing(&'static str),
    #[error("subsystem {index}: {msg}")]
    Matrix { index: usize, msg: String },
    #[error(transparent)]
    System(#[from] SystemError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Syntax { line, msg: msg.into() }
}

#[derive(Default)]
struct Block {
    rows: Vec<Vec<f64>>,
    windows: Vec<(f64, f64)>,
}

fn parse_nested(text: &str, line: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| syntax(line, "matrix must be a nested list like [[1, 0], [0, 1]]"))?;
    let mut rows = Vec::new();
    for piece in inner.split(']') {
        let piece = piece.trim().trim_start_matches(',').trim();
        if piece.is_empty() {
            continue;
        }
        let body = piece.strip_prefix('[').ok_or_else(|| syntax(line, format!("malformed matrix row `{piece}`")))?;
        let row = body
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| syntax(line, format!("bad matrix entry `{}`", tok.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn parse_windows(text: &str, line: usize) -> Result<Vec<(f64, f64)>, ConfigError> {
    text.split(',')
        .map(|pair| {
            let (a, b) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| syntax(line, format!("window `{}` is not t0:t1", pair.trim())))?;
            let t0 = a.trim().parse().map_err(|_| syntax(line, format!("bad number `{a}`")))?;
            let t1 = b.trim().parse().map_err(|_| syntax(line, format!("bad number `{b}`")))?;
            Ok((t0, t1))
        })
        .collect()
}

/// Parses a system description.
pub fn parse_system(text: &str) -> Result<SwitchedSystem, ConfigError> {
    let mut rule: Option<String> = None;
    let mut delta: Option<f64> = None;
    let mut degree: Option<u32> = None;
    let mut composed = false;
    let mut blocks: Vec<Block> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content == "[subsystem]" {
            blocks.push(Block::default());
            continue;
        }
        if content.starts_with('[') {
            return Err(syntax(line, format!("unknown section `{content}`")));
        }
        if let Some((key, value)) = content.split_once('=') {
            let (key, value) = (key.trim(), value.trim());
            match (key, blocks.last_mut()) {
                ("window", Some(block)) => block.windows.extend(parse_windows(value, line)?),
                ("matrix", Some(block)) if block.rows.is_empty() => block.rows = parse_nested(value, line)?,
                ("matrix", Some(_)) => return Err(syntax(line, "subsystem already has a matrix")),
                ("window", None) => return Err(syntax(line, "`window` must appear inside a [subsystem] block")),
                (_, Some(_)) => return Err(syntax(line, format!("unexpected key `{key}` inside [subsystem]"))),
                ("rule", None) => rule = Some(value.to_string()),
                ("delta", None) => {
                    delta = Some(value.parse().map_err(|_| syntax(line, format!("bad delta `{value}`")))?)
                }
                ("degree", None) => {
                    degree = Some(value.parse().map_err(|_| syntax(line, format!("bad degree `{value}`")))?)
                }
                ("composed", None) => {
                    composed = value.parse().map_err(|_| syntax(line, format!("bad boolean `{value}`")))?
                }
                (other, None) => return Err(syntax(line, format!("unknown key `{other}`"))),
            }
            continue;
        }
        let Some(block) = blocks.last_mut() else {
            return Err(syntax(line, "matrix row outside a [subsystem] block"));
        };
        let row = content
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|_| syntax(line, format!("bad matrix entry `{tok}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        block.rows.push(row);
    }

    let subsystems = blocks
        .iter()
        .enumerate()
        .map(|(index, b)| {
            let n = b.rows.len();
            if n == 0 || b.rows.iter().any(|r| r.len() != n) {
                return Err(ConfigError::Matrix { index: index + 1, msg: "matrix must be square and nonempty".into() });
            }
            let a = DMatrix::from_fn(n, n, |i, j| b.rows[i][j]);
            LinearSubsystem::new(a).map_err(|e| ConfigError::Matrix { index: index + 1, msg: e.to_string() })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let windows = || blocks.iter().map(|b| b.windows.clone()).collect::<Vec<_>>();
    let rule = match rule.as_deref().ok_or(ConfigError::Missing("rule"))? {
        "state-sign" => SwitchingRule::StateSign {
            delta: delta.ok_or(ConfigError::Missing("delta"))?,
            degree: degree.ok_or(ConfigError::Missing("degree"))?,
            composed,
        },
        "crisp-state-sign" => SwitchingRule::CrispStateSign { delta: delta.ok_or(ConfigError::Missing("delta"))? },
        "time-pulse" => {
            SwitchingRule::TimePulse { windows: windows(), degree: degree.ok_or(ConfigError::Missing("degree"))? }
        }
        "crisp-time-pulse" => SwitchingRule::CrispTimePulse { windows: windows() },
        other => return Err(ConfigError::Syntax { line: 0, msg: format!("unknown rule `{other}`") }),
    };
    Ok(SwitchedSystem::new(subsystems, rule)?)
}

fn render_windows(ws: &[(f64, f64)]) -> String {
    ws.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(", ")
}

/// Renders a system in the format read by [`parse_system`].
pub fn render_system(sys: &SwitchedSystem) -> String {
    let mut out = String::new();
    let windows: Option<&Vec<Vec<(f64, f64)>>> = match sys.rule() {
        SwitchingRule::StateSign { delta, degree, composed } => {
            out.push_str(&format!("rule = state-sign\ndelta = {delta}\ndegree = {degree}\ncomposed = {composed}\n"));
            None
        }
        SwitchingRule::CrispStateSign { delta } => {
            out.push_str(&format!("rule = crisp-state-sign\ndelta = {delta}\n"));
            None
        }
        SwitchingRule::TimePulse { windows, degree } => {
            out.push_str(&format!("rule = time-pulse\ndegree = {degree}\n"));
            Some(windows)
        }
        SwitchingRule::CrispTimePulse { windows } => {
            out.push_str("rule = crisp-time-pulse\n");
            Some(windows)
        }
    };
    for (i, s) in sys.subsystems().iter().enumerate() {
        out.push_str("\n[subsystem]\n");
        if let Some(ws) = windows {
            out.push_str(&format!("window = {}\n", render_windows(&ws[i])));
        }
        let a = s.matrix();
        let rows: Vec<String> = (0..a.nrows())
            .map(|r| {
                let row: Vec<String> = (0..a.ncols()).map(|c| a[(r, c)].to_string()).collect();
                format!("[{}]", row.join(", "))
            })
            .collect();
        out.push_str(&format!("matrix = [{}]\n", rows.join(", ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::switched::presets;

    const EXAMPLE1: &str = "
        # stable pair
        rule = state-sign
        delta = 10
        degree = 100

        [subsystem]
        -1 1
        -1 -3
        [subsystem]
        matrix = [[0.01, 3], [-1, -4]]   # trailing comment
    ";

    #[test]
    fn parses_state_sign_system() {
        let sys = parse_system(EXAMPLE1).unwrap();
        assert_eq!(sys, presets::preset("example1").unwrap());
    }

    #[test]
    fn parses_time_pulse_system() {
        let text = "rule = time-pulse\ndegree = 50\n[subsystem]\nwindow = 0:0.2, 0.4:1\n-1 0\n0 -1\n[subsystem]\nwindow = 0.2:0.4\n0 1\n-1 0\n";
        let sys = parse_system(text).unwrap();
        assert_eq!(
            sys.rule(),
            &SwitchingRule::TimePulse { windows: vec![vec![(0.0, 0.2), (0.4, 1.0)], vec![(0.2, 0.4)]], degree: 50 }
        );
        assert_eq!(parse_system(&render_system(&sys)).unwrap(), sys);
    }

    #[test]
    fn render_round_trips_presets() {
        for name in presets::NAMES {
            let sys = presets::preset(name).unwrap();
            assert_eq!(parse_system(&render_system(&sys)).unwrap(), sys);
        }
    }

    #[test]
    fn reports_errors() {
        assert_eq!(parse_system("delta = 1\n[subsystem]\n1\n[subsystem]\n1\n"), Err(ConfigError::Missing("rule")));
        assert!(matches!(parse_system("rule = state-sign\ndelta = x\n"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(matches!(parse_system("1 2\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_system("rule = crisp-state-sign\ndelta = 1\n[subsystem]\n1 2\n[subsystem]\n1 0\n0 1\n"),
            Err(ConfigError::Matrix { index: 1, .. })
        ));
        assert!(matches!(parse_system("rule = wobble\n[subsystem]\n1\n"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(parse_system("[other]\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(parse_system("[subsystem]\nmatrix = [1, 2]\n"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(matches!(parse_system("[subsystem]\nmatrix = [[1, x]]\n"), Err(ConfigError::Syntax { line: 2, .. })));
        assert!(matches!(parse_system("[subsystem]\n1\nmatrix = [[1]]\n"), Err(ConfigError::Syntax { line: 3, .. })));
        assert!(matches!(
            parse_system("rule = crisp-state-sign\ndelta = 1\n[subsystem]\n1 0\n0 1\n"),
            Err(ConfigError::System(SystemError::TooFewSubsystems(1)))
        ));
    }
}
