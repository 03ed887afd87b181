use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Live cells inside a `height x width` bounding box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPattern {
    width: usize,
    height: usize,
    cells: BTreeSet<(usize, usize)>,
    name: String,
}

impl GridPattern {
    pub fn new(
        width: usize,
        height: usize,
        cells: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation(format!(
                "pattern dimensions must be positive, got {width}x{height}"
            )));
        }
        let cells: BTreeSet<_> = cells.into_iter().collect();
        if let Some(&(r, c)) = cells.iter().find(|&&(r, c)| r >= height || c >= width) {
            return Err(Error::validation(format!(
                "cell ({r}, {c}) lies outside the {width}x{height} box"
            )));
        }
        Ok(GridPattern {
            width,
            height,
            cells,
            name: String::new(),
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, [])
    }

    /// Parses rows of `.` (dead) and any other non-space character (alive).
    pub fn from_picture(picture: &str) -> Result<Self> {
        let rows: Vec<&str> = picture
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        let cells = rows.iter().enumerate().flat_map(|(r, line)| {
            line.chars()
                .enumerate()
                .filter(|&(_, ch)| ch != '.')
                .map(move |(c, _)| (r, c))
        });
        Self::new(width, rows.len(), cells)
    }

    /// Each cell alive independently with probability `density`.
    pub fn random<R: Rng + ?Sized>(width: usize, height: usize, density: f64, rng: &mut R) -> Result<Self> {
        let mut cells = Vec::new();
        for r in 0..height {
            for c in 0..width {
                if rng.gen_bool(density) {
                    cells.push((r, c));
                }
            }
        }
        Self::new(width, height, cells)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cells(&self) -> &BTreeSet<(usize, usize)> {
        &self.cells
    }

    pub fn population(&self) -> usize {
        self.cells.len()
    }

    pub fn is_alive(&self, r: usize, c: usize) -> bool {
        self.cells.contains(&(r, c))
    }

    /// Mirror image across the horizontal axis.
    pub fn flip_vertical(&self) -> Self {
        let cells = self.cells.iter().map(|&(r, c)| (self.height - 1 - r, c));
        GridPattern {
            cells: cells.collect(),
            ..self.clone()
        }
    }

    /// Mirror image across the vertical axis.
    pub fn flip_horizontal(&self) -> Self {
        let cells = self.cells.iter().map(|&(r, c)| (r, self.width - 1 - c));
        GridPattern {
            cells: cells.collect(),
            ..self.clone()
        }
    }

    /// Live cells in `rows x cols` starting at `(r0, c0)`.
    pub fn count_in(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> usize {
        self.cells
            .range((r0, 0)..(r0 + rows, 0))
            .filter(|&&(_, c)| c >= c0 && c < c0 + cols)
            .count()
    }

    /// Copy of the `rows x cols` window at `(r0, c0)`, re-based to the origin.
    pub fn window(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<Self> {
        let cells = self
            .cells
            .range((r0, 0)..(r0 + rows, 0))
            .filter(|&&(_, c)| c >= c0 && c < c0 + cols)
            .map(|&(r, c)| (r - r0, c - c0));
        Self::new(cols, rows, cells.collect::<Vec<_>>())
    }

    /// `.`/`#` rows.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.height * (self.width + 1));
        for r in 0..self.height {
            for c in 0..self.width {
                out.push(if self.is_alive(r, c) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for GridPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

const RLE_LINE_LIMIT: usize = 70;

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let bad = |msg: &str| Error::parse(lineno, 1, format!("malformed header: {msg}"));
    let mut width = None;
    let mut height = None;
    for part in line.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad("expected 'x = W, y = H'"))?;
        let value = value.trim();
        match key.trim() {
            "x" => width = Some(value.parse().map_err(|_| bad("width is not an integer"))?),
            "y" => height = Some(value.parse().map_err(|_| bad("height is not an integer"))?),
            "rule" => {
                let rule = value.to_ascii_uppercase();
                if rule != "B3/S23" && rule != "23/3" {
                    return Err(bad(&format!("unsupported rule '{value}'")));
                }
            }
            other => return Err(bad(&format!("unknown key '{other}'"))),
        }
    }
    match (width, height) {
        (Some(w), Some(h)) if w > 0 && h > 0 => Ok((w, h)),
        (Some(_), Some(_)) => Err(bad("dimensions must be positive")),
        _ => Err(bad("expected 'x = W, y = H'")),
    }
}

/// Parses run-length-encoded Life patterns. `#N` sets the name; other `#`
/// lines are ignored.
pub fn parse_rle(text: &str) -> Result<GridPattern> {
    let mut name = String::new();
    let mut header = None;
    let mut cells = Vec::new();
    let (mut row, mut col) = (0usize, 0usize);
    let mut run: Option<usize> = None;
    let mut finished = false;
    let mut last_pos = (1, 1);

    'lines: for (k, line) in text.lines().enumerate() {
        let lineno = k + 1;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(n) = comment.strip_prefix('N') {
                name = n.trim().to_string();
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let Some((width, height)) = header else {
            header = Some(parse_header(trimmed, lineno)?);
            continue;
        };
        for (k, ch) in line.chars().enumerate() {
            let colno = k + 1;
            last_pos = (lineno, colno + 1);
            match ch {
                '0'..='9' => {
                    let digit = ch as usize - '0' as usize;
                    let next = run
                        .unwrap_or(0)
                        .checked_mul(10)
                        .and_then(|v| v.checked_add(digit))
                        .ok_or_else(|| Error::parse(lineno, colno, "run count overflows"))?;
                    run = Some(next);
                }
                'b' | 'o' => {
                    let n = run.take().unwrap_or(1);
                    if n == 0 {
                        return Err(Error::parse(lineno, colno, "zero-length run"));
                    }
                    if col + n > width {
                        return Err(Error::parse(
                            lineno,
                            colno,
                            format!("run reaches column {} past width {width}", col + n),
                        ));
                    }
                    if row >= height {
                        return Err(Error::parse(
                            lineno,
                            colno,
                            format!("row {row} past height {height}"),
                        ));
                    }
                    if ch == 'o' {
                        cells.extend((col..col + n).map(|c| (row, c)));
                    }
                    col += n;
                }
                '$' => {
                    let n = run.take().unwrap_or(1);
                    row += n;
                    col = 0;
                }
                '!' => {
                    if run.is_some() {
                        return Err(Error::parse(lineno, colno, "run count before '!'"));
                    }
                    finished = true;
                    break 'lines;
                }
                c if c.is_whitespace() => {
                    if run.is_some() {
                        return Err(Error::parse(lineno, colno, "whitespace inside a run count"));
                    }
                }
                other => {
                    return Err(Error::parse(lineno, colno, format!("unexpected symbol '{other}'")));
                }
            }
        }
    }
    let Some((width, height)) = header else {
        return Err(Error::parse(1, 1, "missing 'x = W, y = H' header"));
    };
    if !finished {
        return Err(Error::parse(last_pos.0, last_pos.1, "missing '!' terminator"));
    }
    Ok(GridPattern::new(width, height, cells)?.with_name(name))
}

fn token(n: usize, sym: char) -> String {
    if n == 1 {
        sym.to_string()
    } else {
        format!("{n}{sym}")
    }
}

/// Canonical RLE: maximal runs, no trailing dead cells or empty rows, lines
/// of at most 70 characters.
pub fn emit_rle(p: &GridPattern) -> String {
    let mut tokens = Vec::new();
    let mut pending_rows = 0;
    for r in 0..p.height {
        let row: Vec<usize> = p.cells.range((r, 0)..(r + 1, 0)).map(|&(_, c)| c).collect();
        if row.is_empty() {
            pending_rows += 1;
            continue;
        }
        if !tokens.is_empty() || pending_rows > 0 {
            // Rows before the first live row still need their '$'.
            let ends = if tokens.is_empty() { pending_rows } else { pending_rows + 1 };
            if ends > 0 {
                tokens.push(token(ends, '$'));
            }
        }
        pending_rows = 0;
        let mut col = 0;
        let mut k = 0;
        while k < row.len() {
            let start = row[k];
            let mut end = start + 1;
            while k + 1 < row.len() && row[k + 1] == end {
                k += 1;
                end += 1;
            }
            if start > col {
                tokens.push(token(start - col, 'b'));
            }
            tokens.push(token(end - start, 'o'));
            col = end;
            k += 1;
        }
    }
    tokens.push("!".into());

    let mut out = format!("x = {}, y = {}\n", p.width, p.height);
    let mut line = String::new();
    for t in tokens {
        if !line.is_empty() && line.len() + t.len() > RLE_LINE_LIMIT {
            out.push_str(&line);
            out.push('\n');
            line.clear();
        }
        line.push_str(&t);
    }
    out.push_str(&line);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    #[test]
    fn parses_simple_patterns() {
        let p = parse_rle("x = 3, y = 1\n3o!").unwrap();
        assert_eq!(p.population(), 3);
        let glider = parse_rle("x = 3, y = 3\nbob$2bo$3o!").unwrap();
        let expected = GridPattern::from_picture(".#.\n..#\n###").unwrap();
        assert_eq!(glider.cells(), expected.cells());
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_rle("x = 2, y = 1\n3o!") {
            Err(Error::Parse { line: 2, column: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_rle("x = 2, y = 1\n2o"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_rle("x = 2 y = 1\no!"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_rle("x = 2, y = 1\nq!"), Err(Error::Parse { .. })));
        assert!(matches!(parse_rle("x = 2, y = 1\no$o!"), Err(Error::Parse { .. })));
        assert!(matches!(parse_rle("#C only a comment\n"), Err(Error::Parse { .. })));
        assert!(parse_rle("x = 0, y = 1\n!").is_err());
        assert!(parse_rle("x = 3, y = 3, rule = B36/S23\n!").is_err());
    }

    #[test]
    fn header_rule_comments_and_wrapping() {
        let p = parse_rle("#N blinker\n#C period 2\nx = 3, y = 1, rule = B3/S23\n3o\n!").unwrap();
        assert_eq!(p.name(), "blinker");
        assert_eq!(p.population(), 3);
        let q = parse_rle("x = 5, y = 2\n$\n5o!").unwrap();
        assert_eq!(q.count_in(0, 0, 1, 5), 0);
        assert_eq!(q.count_in(1, 0, 1, 5), 5);
    }

    #[test]
    fn canonical_emission() {
        let single = GridPattern::new(1, 1, [(0, 0)]).unwrap();
        assert_eq!(emit_rle(&single), "x = 1, y = 1\no!");
        assert_eq!(emit_rle(&GridPattern::empty(2, 2).unwrap()), "x = 2, y = 2\n!");
        let glider = GridPattern::from_picture(".#.\n..#\n###").unwrap();
        assert_eq!(emit_rle(&glider), "x = 3, y = 3\nbo$2bo$3o!");
        let gapped = GridPattern::new(4, 5, [(2, 3), (4, 0)]).unwrap();
        assert_eq!(emit_rle(&gapped), "x = 4, y = 5\n2$3bo2$o!");
    }

    #[test]
    fn long_rows_wrap() {
        let cells: Vec<_> = (0..200).filter(|c| c % 2 == 0).map(|c| (0, c)).collect();
        let p = GridPattern::new(200, 1, cells).unwrap();
        let text = emit_rle(&p);
        assert!(text.lines().all(|l| l.len() <= 70));
        assert_eq!(parse_rle(&text).unwrap().cells(), p.cells());
    }

    #[test]
    fn random_round_trip() {
        let mut rng = seeding::rng(5);
        for k in 0..100 {
            let (w, h) = (1 + k % 17, 1 + (k * 7) % 23);
            let p = GridPattern::random(w, h, 0.4, &mut rng).unwrap();
            let back = parse_rle(&emit_rle(&p)).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn flips_and_windows() {
        let glider = GridPattern::from_picture(".#.\n..#\n###").unwrap();
        assert_eq!(glider.flip_vertical().render(), "###\n..#\n.#.\n");
        assert_eq!(glider.flip_horizontal().render(), ".#.\n#..\n###\n");
        assert_eq!(glider.count_in(1, 1, 2, 2), 3);
        assert_eq!(glider.window(1, 1, 2, 2).unwrap().render(), ".#\n##\n");
        assert!(GridPattern::new(2, 2, [(2, 0)]).is_err());
    }
}
