use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::pattern::GridPattern;
use super::sim::{run_life_with, Arena};
use crate::engine::Capture;
use crate::error::{Error, Result};
use crate::graph::Boundary;

/// Margin used when a spec does not give an arena.
pub const DEFAULT_MARGIN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternKind {
    StillLife,
    Oscillator,
    Spaceship,
    Gun,
    GateCircuit,
}

impl PatternKind {
    pub fn tag(self) -> &'static str {
        match self {
            PatternKind::StillLife => "still-life",
            PatternKind::Oscillator => "oscillator",
            PatternKind::Spaceship => "spaceship",
            PatternKind::Gun => "gun",
            PatternKind::GateCircuit => "gate-circuit",
        }
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "still-life" => Ok(PatternKind::StillLife),
            "oscillator" => Ok(PatternKind::Oscillator),
            "spaceship" => Ok(PatternKind::Spaceship),
            "gun" => Ok(PatternKind::Gun),
            "gate" | "gate-circuit" => Ok(PatternKind::GateCircuit),
            other => Err(Error::validation(format!("unknown pattern kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

/// Travel direction of an injected glider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Heading {
    NE,
    NW,
    SE,
    SW,
}

impl Heading {
    /// The glider in its canonical phase inside a 3x3 box.
    pub fn glider(self) -> GridPattern {
        let se = GridPattern::from_picture(".#.\n..#\n###").expect("static picture");
        match self {
            Heading::SE => se,
            Heading::NE => se.flip_vertical(),
            Heading::SW => se.flip_horizontal(),
            Heading::NW => se.flip_vertical().flip_horizontal(),
        }
    }
}

impl FromStr for Heading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NE" => Ok(Heading::NE),
            "NW" => Ok(Heading::NW),
            "SE" => Ok(Heading::SE),
            "SW" => Ok(Heading::SW),
            other => Err(Error::validation(format!("unknown glider heading '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InputSite {
    pub row: usize,
    pub col: usize,
    pub heading: Heading,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruthRow {
    pub inputs: Vec<bool>,
    pub output: bool,
}

impl fmt::Display for TruthRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.inputs {
            f.write_str(if b { "1" } else { "0" })?;
        }
        write!(f, " -> {}", u8::from(self.output))
    }
}

/// What a pattern is expected to do. Coordinates of probes, bodies and input
/// sites are relative to the pattern's top-left cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternSpec {
    pub name: Option<String>,
    pub kind: PatternKind,
    pub period: usize,
    pub displacement: Option<(isize, isize)>,
    pub arena: Option<(usize, usize)>,
    pub offset: Option<(usize, usize)>,
    pub boundary: Boundary,
    pub probe: Option<Rect>,
    pub body: Option<Rect>,
    pub first_read: Option<usize>,
    pub emissions: usize,
    pub signature: usize,
    pub read_time: Option<usize>,
    pub settle: Option<usize>,
    pub inputs: Vec<InputSite>,
    pub rows: Vec<TruthRow>,
}

impl PatternSpec {
    pub fn new(kind: PatternKind, period: usize) -> Self {
        PatternSpec {
            name: None,
            kind,
            period,
            displacement: None,
            arena: None,
            offset: None,
            boundary: Boundary::Dead,
            probe: None,
            body: None,
            first_read: None,
            emissions: 5,
            signature: 5,
            read_time: None,
            settle: None,
            inputs: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = PatternSpec::new(PatternKind::StillLife, 1);
        let mut seen_kind = false;
        let mut seen_period = false;
        for (k, raw) in text.lines().enumerate() {
            let lineno = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, 1, "expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            let err = |e: Error| Error::parse(lineno, 1, format!("{key}: {e}"));
            match key {
                "name" => spec.name = Some(value.to_string()),
                "kind" => {
                    spec.kind = value.parse().map_err(err)?;
                    seen_kind = true;
                }
                "period" => {
                    spec.period = ints::<usize, 1>(value).map_err(err)?[0];
                    seen_period = true;
                }
                "displacement" => {
                    let [dr, dc] = ints::<isize, 2>(value).map_err(err)?;
                    spec.displacement = Some((dr, dc));
                }
                "arena" => {
                    let [r, c] = ints(value).map_err(err)?;
                    spec.arena = Some((r, c));
                }
                "offset" => {
                    let [r, c] = ints(value).map_err(err)?;
                    spec.offset = Some((r, c));
                }
                "boundary" => spec.boundary = value.parse().map_err(err)?,
                "probe" | "body" => {
                    let [row, col, height, width] = ints(value).map_err(err)?;
                    let rect = Some(Rect {
                        row,
                        col,
                        height,
                        width,
                    });
                    if key == "probe" {
                        spec.probe = rect;
                    } else {
                        spec.body = rect;
                    }
                }
                "first_read" => spec.first_read = Some(ints::<usize, 1>(value).map_err(err)?[0]),
                "emissions" => spec.emissions = ints::<usize, 1>(value).map_err(err)?[0],
                "signature" => spec.signature = ints::<usize, 1>(value).map_err(err)?[0],
                "read_time" => spec.read_time = Some(ints::<usize, 1>(value).map_err(err)?[0]),
                "settle" => spec.settle = Some(ints::<usize, 1>(value).map_err(err)?[0]),
                "input" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    let [r, c, h] = parts[..] else {
                        return Err(err(Error::validation("expected 'row col heading'")));
                    };
                    let [row, col] = ints(&format!("{r} {c}")).map_err(err)?;
                    spec.inputs.push(InputSite {
                        row,
                        col,
                        heading: h.parse().map_err(err)?,
                    });
                }
                "row" => spec.rows.push(parse_row(value).map_err(err)?),
                other => {
                    return Err(Error::parse(lineno, 1, format!("unknown key '{other}'")));
                }
            }
        }
        if !seen_kind || !seen_period {
            return Err(Error::parse(1, 1, "spec needs both 'kind' and 'period'"));
        }
        Ok(spec)
    }

    /// The arena from the spec, or the pattern with a default margin.
    pub fn arena_for(&self, p: &GridPattern) -> Arena {
        let mut arena = Arena::around(p, DEFAULT_MARGIN);
        if let Some((rows, cols)) = self.arena {
            arena.rows = rows;
            arena.cols = cols;
            arena.offset = (0, 0);
        }
        if let Some(offset) = self.offset {
            arena.offset = offset;
        }
        arena.boundary = self.boundary;
        arena
    }
}

fn ints<T: FromStr, const N: usize>(value: &str) -> Result<[T; N]> {
    let parsed: Vec<T> = value
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::validation(format!("'{value}' is not a list of integers")))?;
    parsed
        .try_into()
        .map_err(|_| Error::validation(format!("expected {N} integers in '{value}'")))
}

fn parse_row(value: &str) -> Result<TruthRow> {
    let (bits, out) = value
        .split_once("->")
        .ok_or_else(|| Error::validation("expected 'bits -> bit'"))?;
    let bit = |ch: char| match ch {
        '0' => Ok(false),
        '1' => Ok(true),
        other => Err(Error::validation(format!("'{other}' is not a bit"))),
    };
    let inputs = bits.trim().chars().map(bit).collect::<Result<Vec<_>>>()?;
    let out: Vec<char> = out.trim().chars().collect();
    let [out] = out[..] else {
        return Err(Error::validation("output must be a single bit"));
    };
    Ok(TruthRow {
        inputs,
        output: bit(out)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowOutcome {
    pub row: String,
    pub observed: bool,
    pub recovered: Option<bool>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub name: String,
    pub kind: PatternKind,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<RowOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probe_counts: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_detection: Option<usize>,
    pub details: Vec<String>,
}

impl ValidationReport {
    fn new(name: String, kind: PatternKind) -> Self {
        ValidationReport {
            name,
            kind,
            passed: false,
            accuracy: None,
            rows: Vec::new(),
            probe_counts: Vec::new(),
            first_detection: None,
            details: Vec::new(),
        }
    }
}

fn rect_in_arena(rect: &Rect, arena: &Arena, what: &str) -> Result<Rect> {
    let (r0, c0) = arena.offset;
    let moved = Rect {
        row: rect.row + r0,
        col: rect.col + c0,
        ..*rect
    };
    if rect.height == 0
        || rect.width == 0
        || moved.row + rect.height > arena.rows
        || moved.col + rect.width > arena.cols
    {
        return Err(Error::validation(format!("{what} window lies outside the arena")));
    }
    Ok(moved)
}

fn check_consistency(p: &GridPattern, spec: &PatternSpec, arena: &Arena) -> Result<()> {
    arena.embed(p)?;
    if spec.period == 0 {
        return Err(Error::validation("period must be >= 1"));
    }
    match spec.kind {
        PatternKind::StillLife if spec.period != 1 => {
            Err(Error::validation("still lifes have period 1"))
        }
        PatternKind::Spaceship => match spec.displacement {
            Some((0, 0)) | None => Err(Error::validation("spaceships need a nonzero displacement")),
            Some(_) => Ok(()),
        },
        PatternKind::Gun => {
            let probe = spec.probe.ok_or_else(|| Error::validation("guns need a probe window"))?;
            rect_in_arena(&probe, arena, "probe")?;
            if let Some(body) = spec.body {
                rect_in_arena(&body, arena, "body")?;
            }
            if spec.first_read.is_none() {
                return Err(Error::validation("guns need 'first_read'"));
            }
            if spec.emissions == 0 {
                return Err(Error::validation("guns need at least one emission"));
            }
            Ok(())
        }
        PatternKind::GateCircuit => {
            let probe = spec.probe.ok_or_else(|| Error::validation("gates need a probe window"))?;
            rect_in_arena(&probe, arena, "probe")?;
            let read = spec.read_time.ok_or_else(|| Error::validation("gates need 'read_time'"))?;
            if spec.settle.is_some_and(|s| s < read) {
                return Err(Error::validation("settle time precedes read time"));
            }
            if spec.inputs.is_empty() {
                return Err(Error::validation("gates need at least one input site"));
            }
            if spec.rows.is_empty() {
                return Err(Error::validation("gate truth table is empty"));
            }
            for site in &spec.inputs {
                let rect = Rect {
                    row: site.row,
                    col: site.col,
                    height: 3,
                    width: 3,
                };
                rect_in_arena(&rect, arena, "input")?;
            }
            if let Some(row) = spec.rows.iter().find(|r| r.inputs.len() != spec.inputs.len()) {
                return Err(Error::validation(format!(
                    "truth-table row '{row}' has {} inputs, circuit has {}",
                    row.inputs.len(),
                    spec.inputs.len()
                )));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn translate(p: &GridPattern, dr: isize, dc: isize) -> Option<GridPattern> {
    let cells: Option<Vec<(usize, usize)>> = p
        .cells()
        .iter()
        .map(|&(r, c)| {
            let r = usize::try_from(r as isize + dr).ok()?;
            let c = usize::try_from(c as isize + dc).ok()?;
            (r < p.height() && c < p.width()).then_some((r, c))
        })
        .collect();
    GridPattern::new(p.width(), p.height(), cells?).ok()
}

fn count_rect(p: &GridPattern, rect: &Rect) -> usize {
    p.count_in(rect.row, rect.col, rect.height, rect.width)
}

/// Pattern with gliders added at the sites whose bit is set.
pub fn inject(p: &GridPattern, sites: &[InputSite], bits: &[bool]) -> Result<GridPattern> {
    let mut cells = p.cells().clone();
    let mut width = p.width();
    let mut height = p.height();
    for (site, _) in sites.iter().zip(bits).filter(|(_, &b)| b) {
        for &(r, c) in site.heading.glider().cells() {
            cells.insert((site.row + r, site.col + c));
        }
        height = height.max(site.row + 3);
        width = width.max(site.col + 3);
    }
    Ok(GridPattern::new(width, height, cells)?.with_name(p.name()))
}

/// Checks a pattern against its spec by simulation. Specs that do not fit
/// the pattern are an error; behavior that does not match is a failed report.
pub fn validate_pattern(
    p: &GridPattern,
    spec: &PatternSpec,
    arena: &Arena,
) -> Result<ValidationReport> {
    check_consistency(p, spec, arena)?;
    let name = spec.name.clone().unwrap_or_else(|| p.name().to_string());
    let mut report = ValidationReport::new(name, spec.kind);
    match spec.kind {
        PatternKind::StillLife | PatternKind::Oscillator => {
            let trace = run_life_with(p, spec.period, arena, Capture::All)?;
            let start = &trace.states[0];
            if p.population() == 0 {
                report.details.push("pattern is empty".into());
            }
            if trace.last() != start {
                report
                    .details
                    .push(format!("state at t={} differs from t=0", spec.period));
            }
            for q in (1..spec.period).filter(|q| spec.period.is_multiple_of(*q)) {
                if &trace.states[q] == start {
                    report.details.push(format!("pattern already repeats at t={q}"));
                }
            }
        }
        PatternKind::Spaceship => {
            let (dr, dc) = spec.displacement.expect("checked above");
            let trace = run_life_with(p, spec.period, arena, Capture::Endpoints)?;
            let start = arena.extract(trace.initial());
            let end = arena.extract(trace.last());
            match translate(&start, dr, dc) {
                Some(expected) if expected == end => {}
                Some(_) => report.details.push(format!(
                    "state at t={} is not the start moved by ({dr}, {dc})",
                    spec.period
                )),
                None => report.details.push("translated pattern leaves the arena".into()),
            }
        }
        PatternKind::Gun => validate_gun(p, spec, arena, &mut report)?,
        PatternKind::GateCircuit => validate_gate(p, spec, arena, &mut report)?,
    }
    report.passed = report.details.is_empty();
    Ok(report)
}

fn validate_gun(
    p: &GridPattern,
    spec: &PatternSpec,
    arena: &Arena,
    report: &mut ValidationReport,
) -> Result<()> {
    let probe = rect_in_arena(&spec.probe.expect("checked"), arena, "probe")?;
    let body = match spec.body {
        Some(b) => rect_in_arena(&b, arena, "body")?,
        None => Rect {
            row: arena.offset.0,
            col: arena.offset.1,
            height: p.height(),
            width: p.width(),
        },
    };
    let t0 = spec.first_read.expect("checked");
    let horizon = t0 + spec.period * (spec.emissions - 1);
    let trace = run_life_with(p, horizon, arena, Capture::All)?;
    let frames: Vec<GridPattern> = trace.states.iter().map(|h| arena.extract(h)).collect();
    report.first_detection = frames.iter().position(|f| count_rect(f, &probe) > 0);
    let body_at = |t: usize| frames[t].window(body.row, body.col, body.height, body.width);
    let reference_body = body_at(t0)?;
    for k in 0..spec.emissions {
        let t = t0 + k * spec.period;
        let count = count_rect(&frames[t], &probe);
        report.probe_counts.push(count);
        if count != spec.signature {
            report.details.push(format!(
                "probe holds {count} cells at t={t}, expected {}",
                spec.signature
            ));
        }
        if body_at(t)? != reference_body {
            report.details.push(format!("gun body at t={t} differs from t={t0}"));
        }
    }
    Ok(())
}

fn validate_gate(
    p: &GridPattern,
    spec: &PatternSpec,
    arena: &Arena,
    report: &mut ValidationReport,
) -> Result<()> {
    let probe = rect_in_arena(&spec.probe.expect("checked"), arena, "probe")?;
    let read = spec.read_time.expect("checked");
    let idle = match spec.settle {
        Some(s) => Some(run_life_with(p, s, arena, Capture::Endpoints)?.into_last()),
        None => None,
    };
    let outcomes: Vec<RowOutcome> = spec
        .rows
        .par_iter()
        .map(|row| -> Result<RowOutcome> {
            let fed = inject(p, &spec.inputs, &row.inputs)?;
            let at_read = run_life_with(&fed, read, arena, Capture::Endpoints)?.into_last();
            let observed = count_rect(&arena.extract(&at_read), &probe) > 0;
            let recovered = match (&idle, spec.settle) {
                (Some(idle), Some(settle)) => {
                    let g = arena.graph()?;
                    let later = crate::engine::evolve(
                        &at_read,
                        &g,
                        &crate::rules::LifeRule,
                        settle - read,
                        Capture::Endpoints,
                    )?
                    .into_last();
                    Some(&later == idle)
                }
                _ => None,
            };
            Ok(RowOutcome {
                row: row.to_string(),
                observed,
                recovered,
                passed: observed == row.output && recovered != Some(false),
            })
        })
        .collect::<Result<_>>()?;
    for o in outcomes.iter().filter(|o| !o.passed) {
        report.details.push(format!(
            "row '{}' read {} (recovered: {:?})",
            o.row,
            u8::from(o.observed),
            o.recovered
        ));
    }
    let good = outcomes.iter().filter(|o| o.passed).count();
    report.accuracy = Some(good as f64 / outcomes.len() as f64);
    report.rows = outcomes;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn glider() -> GridPattern {
        Heading::SE.glider()
    }

    #[test]
    fn headings() {
        assert_eq!(Heading::NE.glider().render(), "###\n..#\n.#.\n");
        assert_eq!(Heading::NW.glider().render(), "###\n#..\n.#.\n");
        assert_eq!(Heading::SW.glider().render(), ".#.\n#..\n###\n");
    }

    #[test]
    fn parses_gate_spec() {
        let spec = PatternSpec::parse(
            "# demo\nkind = gate\nperiod = 30\narena = 50 60\noffset = 0 0\nprobe = 1 2 3 4\n\
             read_time = 100\nsettle = 200\ninput = 5 6 NE\ninput = 7 8 sw\nrow = 01 -> 1\nrow = 11->0\n",
        )
        .unwrap();
        assert_eq!(spec.kind, PatternKind::GateCircuit);
        assert_eq!(spec.inputs[1].heading, Heading::SW);
        assert_eq!(spec.rows[0], TruthRow { inputs: vec![false, true], output: true });
        assert_eq!(spec.rows[1].to_string(), "11 -> 0");
        assert_eq!(spec.probe, Some(Rect { row: 1, col: 2, height: 3, width: 4 }));
    }

    #[test]
    fn spec_parse_errors() {
        assert!(PatternSpec::parse("kind = oscillator\n").is_err());
        assert!(matches!(
            PatternSpec::parse("kind = oscillator\nperiod = 2\ncolour = red\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(PatternSpec::parse("kind = blob\nperiod = 2\n").is_err());
        assert!(PatternSpec::parse("kind = gate\nperiod = 2\nrow = 2 -> 1\n").is_err());
        assert!(PatternSpec::parse("kind = gun\nperiod = 2\nprobe = 1 2 3\n").is_err());
    }

    #[test]
    fn blinker_oscillates() {
        let p = GridPattern::from_picture("###").unwrap();
        let spec = PatternSpec::new(PatternKind::Oscillator, 2);
        let r = validate_pattern(&p, &spec, &spec.arena_for(&p)).unwrap();
        assert!(r.passed, "{:?}", r.details);
        let wrong = PatternSpec::new(PatternKind::Oscillator, 4);
        let r = validate_pattern(&p, &wrong, &wrong.arena_for(&p)).unwrap();
        assert!(!r.passed);
        let still = PatternSpec::new(PatternKind::StillLife, 1);
        assert!(!validate_pattern(&p, &still, &still.arena_for(&p)).unwrap().passed);
    }

    #[test]
    fn glider_spaceship() {
        let mut spec = PatternSpec::new(PatternKind::Spaceship, 4);
        spec.displacement = Some((1, 1));
        let r = validate_pattern(&glider(), &spec, &spec.arena_for(&glider())).unwrap();
        assert!(r.passed, "{:?}", r.details);
        spec.displacement = Some((1, -1));
        assert!(!validate_pattern(&glider(), &spec, &spec.arena_for(&glider())).unwrap().passed);
        spec.displacement = Some((0, 0));
        assert!(validate_pattern(&glider(), &spec, &spec.arena_for(&glider())).is_err());
    }

    #[test]
    fn inconsistent_specs_are_errors() {
        let p = glider();
        let mut spec = PatternSpec::new(PatternKind::GateCircuit, 1);
        assert!(validate_pattern(&p, &spec, &spec.arena_for(&p)).is_err());
        spec.probe = Some(Rect { row: 0, col: 0, height: 2, width: 2 });
        spec.read_time = Some(5);
        spec.inputs.push(InputSite { row: 0, col: 0, heading: Heading::NE });
        assert!(validate_pattern(&p, &spec, &spec.arena_for(&p)).is_err());
        spec.rows.push(TruthRow { inputs: vec![true, false], output: true });
        assert!(validate_pattern(&p, &spec, &spec.arena_for(&p)).is_err());
        let mut small = PatternSpec::new(PatternKind::Oscillator, 1);
        small.arena = Some((2, 2));
        assert!(validate_pattern(&p, &small, &small.arena_for(&p)).is_err());
    }

    #[test]
    fn injection_places_gliders() {
        let base = GridPattern::empty(10, 10).unwrap();
        let sites = [
            InputSite { row: 0, col: 0, heading: Heading::SE },
            InputSite { row: 5, col: 5, heading: Heading::NE },
        ];
        let fed = inject(&base, &sites, &[false, true]).unwrap();
        assert_eq!(fed.population(), 5);
        assert!(fed.is_alive(5, 5) && fed.is_alive(7, 6));
    }

    #[test]
    fn single_glider_gate_toy() {
        // A lone SE glider reaches the probe; no input means nothing arrives.
        let base = GridPattern::empty(12, 12).unwrap();
        let mut spec = PatternSpec::new(PatternKind::GateCircuit, 1);
        spec.probe = Some(Rect { row: 6, col: 6, height: 3, width: 3 });
        spec.read_time = Some(24);
        spec.inputs.push(InputSite { row: 0, col: 0, heading: Heading::SE });
        spec.rows = vec![
            TruthRow { inputs: vec![false], output: false },
            TruthRow { inputs: vec![true], output: true },
        ];
        let arena = spec.arena_for(&base);
        let r = validate_pattern(&base, &spec, &arena).unwrap();
        assert_eq!(r.accuracy, Some(1.0));
        assert!(r.passed);
    }
}
