//! Canonical six-line scenario text and its strict parser.
//!
//! ```text
//! UAV Handover Assessment:
//! UAV State: Speed 15 m/s, Buffer 20, Mission Standard
//! Serving BS: ID BS3, RSRP -88.00 dBm, RSRQ -9.00 dB, CQI 10.
//! Handover Command: Handover to BS7.
//! Target BS (ID BS7): Local RSRP -105.00 dBm, Local RSRQ -14.00 dB, Local CQI 4.
//! Strongest Neighbor BS (ID BS4): Local RSRP -90.00 dBm, Local RSRQ -10.00 dB, Local CQI 9.
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::scenario::{BsMeasurement, RangeError, Scenario};
use crate::schema::Mission;

const HEADER: &str = "UAV Handover Assessment:";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("handover command names BS{command} but target block is BS{target}")]
    Consistency { command: u32, target: u32 },
    #[error(transparent)]
    Range(#[from] RangeError),
}

pub fn mission_text(m: Mission) -> &'static str {
    match m {
        Mission::LowLatency => "Low-Latency",
        Mission::Standard => "Standard",
        Mission::HighThroughput => "High-Throughput",
    }
}

pub fn render(s: &Scenario) -> String {
    let mut out = String::with_capacity(320);
    let m = |b: &BsMeasurement| {
        format!(
            "Local RSRP {:.2} dBm, Local RSRQ {:.2} dB, Local CQI {}.",
            b.rsrp, b.rsrq, b.cqi
        )
    };
    // writing to a String cannot fail
    let _ = write!(
        out,
        "{HEADER}\n\
         UAV State: Speed {} m/s, Buffer {}, Mission {}\n\
         Serving BS: ID BS{}, RSRP {:.2} dBm, RSRQ {:.2} dB, CQI {}.\n\
         Handover Command: Handover to BS{}.\n\
         Target BS (ID BS{}): {}\n\
         Strongest Neighbor BS (ID BS{}): {}",
        s.speed,
        s.buffer,
        mission_text(s.mission),
        s.serving.bs_id,
        s.serving.rsrp,
        s.serving.rsrq,
        s.serving.cqi,
        s.target.bs_id,
        s.target.bs_id,
        m(&s.target),
        s.neighbor.bs_id,
        m(&s.neighbor),
    );
    out
}

/// Cursor over one line; every step consumes an exact literal or one field.
struct Line<'a> {
    no: usize,
    rest: &'a str,
}

impl<'a> Line<'a> {
    fn err(&self, message: impl Into<String>) -> TextError {
        TextError::Parse {
            line: self.no,
            message: message.into(),
        }
    }

    fn lit(&mut self, expected: &str) -> Result<(), TextError> {
        match self.rest.strip_prefix(expected) {
            Some(r) => {
                self.rest = r;
                Ok(())
            }
            None => Err(self.err(format!("expected {expected:?} at {:?}", self.rest))),
        }
    }

    fn token(&mut self, keep: impl Fn(char) -> bool) -> &'a str {
        let end = self.rest.find(|c: char| !keep(c)).unwrap_or(self.rest.len());
        let (tok, rest) = self.rest.split_at(end);
        self.rest = rest;
        tok
    }

    fn uint(&mut self, what: &str) -> Result<u32, TextError> {
        let tok = self.token(|c| c.is_ascii_alphanumeric());
        if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.err(format!("{what}: expected an unsigned integer, got {tok:?}")));
        }
        tok.parse()
            .map_err(|_| self.err(format!("{what}: {tok:?} does not fit")))
    }

    /// Fixed-point number with exactly two decimals, optional leading minus.
    fn fixed2(&mut self, what: &str) -> Result<f64, TextError> {
        let tok = self.token(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '+');
        let digits = tok.strip_prefix('-').unwrap_or(tok);
        let ok = match digits.split_once('.') {
            Some((int, frac)) => {
                !int.is_empty()
                    && int.bytes().all(|b| b.is_ascii_digit())
                    && frac.len() == 2
                    && frac.bytes().all(|b| b.is_ascii_digit())
            }
            None => false,
        };
        if !ok {
            return Err(self.err(format!("{what}: expected a two-decimal number, got {tok:?}")));
        }
        tok.parse()
            .map_err(|_| self.err(format!("{what}: cannot parse {tok:?}")))
    }

    fn end(&self) -> Result<(), TextError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(self.err(format!("unexpected trailing text {:?}", self.rest)))
        }
    }
}

fn parse_mission(line: &mut Line<'_>) -> Result<Mission, TextError> {
    let m = Mission::ALL
        .iter()
        .copied()
        .find(|m| line.rest.starts_with(mission_text(*m)))
        .ok_or_else(|| line.err(format!("unknown mission {:?}", line.rest)))?;
    line.lit(mission_text(m))?;
    Ok(m)
}

fn parse_local(line: &mut Line<'_>, bs_id: u32) -> Result<BsMeasurement, TextError> {
    line.lit("Local RSRP ")?;
    let rsrp = line.fixed2("rsrp")?;
    line.lit(" dBm, Local RSRQ ")?;
    let rsrq = line.fixed2("rsrq")?;
    line.lit(" dB, Local CQI ")?;
    let cqi = line.uint("cqi")?;
    line.lit(".")?;
    line.end()?;
    Ok(BsMeasurement { bs_id, rsrp, rsrq, cqi })
}

/// Parses canonical scenario text; trailing whitespace on each line is ignored.
pub fn parse(text: &str) -> Result<Scenario, TextError> {
    let raw: Vec<&str> = text.trim_end().split('\n').map(str::trim_end).collect();
    if raw.len() != 6 {
        return Err(TextError::Parse {
            line: raw.len().min(6) + 1,
            message: format!("expected 6 lines, found {}", raw.len()),
        });
    }
    let mut lines = raw.iter().enumerate().map(|(i, rest)| Line { no: i + 1, rest });
    let mut next = || lines.next().expect("six lines");

    let mut l = next();
    l.lit(HEADER)?;
    l.end()?;

    let mut l = next();
    l.lit("UAV State: Speed ")?;
    let speed = l.uint("speed")?;
    l.lit(" m/s, Buffer ")?;
    let buffer = l.uint("buffer")?;
    l.lit(", Mission ")?;
    let mission = parse_mission(&mut l)?;
    l.end()?;

    let mut l = next();
    l.lit("Serving BS: ID BS")?;
    let serving_id = l.uint("serving id")?;
    l.lit(", RSRP ")?;
    let rsrp = l.fixed2("rsrp")?;
    l.lit(" dBm, RSRQ ")?;
    let rsrq = l.fixed2("rsrq")?;
    l.lit(" dB, CQI ")?;
    let cqi = l.uint("cqi")?;
    l.lit(".")?;
    l.end()?;
    let serving = BsMeasurement {
        bs_id: serving_id,
        rsrp,
        rsrq,
        cqi,
    };

    let mut l = next();
    l.lit("Handover Command: Handover to BS")?;
    let command = l.uint("command id")?;
    l.lit(".")?;
    l.end()?;

    let mut l = next();
    l.lit("Target BS (ID BS")?;
    let target_id = l.uint("target id")?;
    l.lit("): ")?;
    let target = parse_local(&mut l, target_id)?;

    let mut l = next();
    l.lit("Strongest Neighbor BS (ID BS")?;
    let neighbor_id = l.uint("neighbor id")?;
    l.lit("): ")?;
    let neighbor = parse_local(&mut l, neighbor_id)?;

    if command != target_id {
        return Err(TextError::Consistency {
            command,
            target: target_id,
        });
    }
    let s = Scenario {
        speed,
        buffer,
        mission,
        serving,
        target,
        neighbor,
    };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LISTING: &str = "UAV Handover Assessment:
UAV State: Speed 15 m/s, Buffer 20, Mission Standard
Serving BS: ID BS3, RSRP -88.00 dBm, RSRQ -9.00 dB, CQI 10.
Handover Command: Handover to BS7.
Target BS (ID BS7): Local RSRP -105.00 dBm, Local RSRQ -14.00 dB, Local CQI 4.
Strongest Neighbor BS (ID BS4): Local RSRP -90.00 dBm, Local RSRQ -10.00 dB, Local CQI 9.";

    fn listing_scenario() -> Scenario {
        Scenario {
            speed: 15,
            buffer: 20,
            mission: Mission::Standard,
            serving: BsMeasurement { bs_id: 3, rsrp: -88.0, rsrq: -9.0, cqi: 10 },
            target: BsMeasurement { bs_id: 7, rsrp: -105.0, rsrq: -14.0, cqi: 4 },
            neighbor: BsMeasurement { bs_id: 4, rsrp: -90.0, rsrq: -10.0, cqi: 9 },
        }
    }

    #[test]
    fn parses_listing() {
        assert_eq!(parse(LISTING).unwrap(), listing_scenario());
        assert_eq!(render(&listing_scenario()), LISTING);
    }

    #[test]
    fn tolerates_trailing_whitespace() {
        let padded: String = LISTING.lines().map(|l| format!("{l}  \t\n")).collect();
        assert_eq!(parse(&padded).unwrap(), listing_scenario());
    }

    #[test]
    fn id_mismatch_is_consistency_error() {
        let text = LISTING.replace("Target BS (ID BS7)", "Target BS (ID BS8)");
        assert_eq!(
            parse(&text),
            Err(TextError::Consistency { command: 7, target: 8 })
        );
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            (LISTING.replace("UAV State", "UAV Status"), 2),
            (LISTING.replace("RSRP -88.00", "RSRP -88.0"), 3),
            (LISTING.replace("RSRP -88.00", "RSRP 1e3"), 3),
            (LISTING.replace("Handover to BS7.", "Handover to BS7"), 4),
            (LISTING.replace("Local CQI 9.", "Local CQI nine."), 6),
            (LISTING.replace("Mission Standard", "Mission Urgent"), 2),
            (LISTING.replace("CQI 4.", "CQI 4. extra"), 5),
        ];
        for (text, line) in cases {
            match parse(&text) {
                Err(TextError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
        let short: String = LISTING.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(matches!(parse(&short), Err(TextError::Parse { line: 5, .. })));
    }

    #[test]
    fn out_of_range_field() {
        let text = LISTING.replace("Local CQI 4.", "Local CQI 16.");
        assert!(matches!(parse(&text), Err(TextError::Range(e)) if e.field == "target.cqi"));
        let text = LISTING.replace("Speed 15", "Speed 41");
        assert!(matches!(parse(&text), Err(TextError::Range(_))));
    }

    #[test]
    fn forced_decimals() {
        let mut s = listing_scenario();
        s.target.rsrp = -90.0;
        assert!(render(&s).contains("Local RSRP -90.00 dBm"));
    }
}
