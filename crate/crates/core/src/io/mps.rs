//! Fixed-format MPS subset.
//!
//! Sections: `NAME`, `ROWS`, `COLUMNS` (with `MARKER`/`INTORG`/`INTEND`),
//! `RHS`, `BOUNDS` (`UP`, `LO`, `BV`, `FX`, `MI`, `PL`, `FR`), `ENDATA`.
//! Fields are separated by whitespace, so names may not contain blanks.
//! The first `N` row is the (minimized) objective. `G` rows are negated and
//! `E` rows split into a `<=` pair, in the order the rows are declared.
//! Columns start with bounds `[0, +inf)`; marked integer columns need an
//! explicit finite upper bound (or `BV`).

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::MpsError;
use crate::mip::{InstanceBuilder, MipInstance, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Start,
    Name,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowKind {
    Objective,
    Constraint(Sense),
}

struct Column {
    cost: f64,
    entries: Vec<(usize, f64)>,
    integer: bool,
    lower: f64,
    upper: f64,
}

pub fn parse_mps(text: &str) -> Result<MipInstance, MpsError> {
    let mut section = Section::Start;
    let mut name = String::new();
    let mut rows: Vec<(String, RowKind)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut objective_row: Option<usize> = None;
    let mut columns: Vec<Column> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut in_integer_block = false;
    let mut last_line = 0;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        last_line = line_no;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let malformed = |message: &str| MpsError::Malformed { line: line_no, message: message.to_string() };
        let fields: Vec<&str> = raw.split_whitespace().collect();

        if !raw.starts_with(char::is_whitespace) {
            let header = fields[0];
            section = match header {
                "NAME" => {
                    name = fields.get(1..).map(|f| f.join(" ")).unwrap_or_default();
                    Section::Name
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    return build(name, rows, objective_row, columns, rhs, line_no);
                }
                other => {
                    return Err(MpsError::UnknownSection { line: line_no, section: other.to_string() });
                }
            };
            continue;
        }

        match section {
            Section::Start | Section::Name => return Err(malformed("data line outside a section")),
            Section::Rows => {
                let [kind, row_name] = fields[..] else {
                    return Err(malformed("expected `<type> <name>`"));
                };
                let kind = match kind {
                    "N" => RowKind::Objective,
                    "L" => RowKind::Constraint(Sense::Le),
                    "G" => RowKind::Constraint(Sense::Ge),
                    "E" => RowKind::Constraint(Sense::Eq),
                    _ => return Err(malformed("row type must be N, L, G or E")),
                };
                if row_index.contains_key(row_name) {
                    return Err(MpsError::DuplicateRow { line: line_no, name: row_name.to_string() });
                }
                if kind == RowKind::Objective && objective_row.is_none() {
                    objective_row = Some(rows.len());
                }
                row_index.insert(row_name.to_string(), rows.len());
                rows.push((row_name.to_string(), kind));
                rhs.push(0.0);
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    match fields[2] {
                        "'INTORG'" => in_integer_block = true,
                        "'INTEND'" => in_integer_block = false,
                        _ => return Err(malformed("unknown marker")),
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(malformed("expected `<column> <row> <value> [<row> <value>]`"));
                }
                let col_name = fields[0];
                let j = match col_index.get(col_name) {
                    Some(&j) if j + 1 == columns.len() => j,
                    Some(_) => return Err(malformed("column entries must be contiguous")),
                    None => {
                        col_index.insert(col_name.to_string(), columns.len());
                        columns.push(Column {
                            cost: 0.0,
                            entries: Vec::new(),
                            integer: in_integer_block,
                            lower: 0.0,
                            upper: f64::INFINITY,
                        });
                        columns.len() - 1
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let row = *row_index
                        .get(pair[0])
                        .ok_or_else(|| MpsError::UnknownRowInColumns { line: line_no, name: pair[0].to_string() })?;
                    let val = parse_number(pair[1], line_no)?;
                    if Some(row) == objective_row {
                        columns[j].cost = val;
                    } else if rows[row].1 == RowKind::Objective {
                        // extra free rows carry no constraint
                    } else {
                        columns[j].entries.push((row, val));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(malformed("expected `<set> <row> <value> [<row> <value>]`"));
                }
                for pair in fields[1..].chunks(2) {
                    let row = *row_index
                        .get(pair[0])
                        .ok_or_else(|| malformed(&format!("RHS references unknown row `{}`", pair[0])))?;
                    rhs[row] = parse_number(pair[1], line_no)?;
                }
            }
            Section::Bounds => {
                let (kind, col_name, value) = match fields[..] {
                    [kind, _set, col, value] => (kind, col, Some(value)),
                    [kind, _set, col] => (kind, col, None),
                    _ => return Err(malformed("expected `<type> <set> <column> [<value>]`")),
                };
                let j = *col_index
                    .get(col_name)
                    .ok_or_else(|| malformed(&format!("BOUNDS references unknown column `{col_name}`")))?;
                let value = value.map(|v| parse_number(v, line_no)).transpose()?;
                let need = || value.ok_or_else(|| malformed("bound value missing"));
                let col = &mut columns[j];
                match kind {
                    "UP" => col.upper = need()?,
                    "LO" => col.lower = need()?,
                    "FX" => {
                        let v = need()?;
                        col.lower = v;
                        col.upper = v;
                    }
                    "BV" => {
                        col.integer = true;
                        col.lower = 0.0;
                        col.upper = 1.0;
                    }
                    "MI" => col.lower = f64::NEG_INFINITY,
                    "PL" => col.upper = f64::INFINITY,
                    "FR" => {
                        col.lower = f64::NEG_INFINITY;
                        col.upper = f64::INFINITY;
                    }
                    other => return Err(malformed(&format!("unsupported bound type `{other}`"))),
                }
            }
        }
    }
    Err(MpsError::MissingEndata { line: last_line + 1 })
}

fn parse_number(field: &str, line: usize) -> Result<f64, MpsError> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| MpsError::Malformed { line, message: format!("`{field}` is not a finite number") })
}

fn build(
    name: String,
    rows: Vec<(String, RowKind)>,
    objective_row: Option<usize>,
    columns: Vec<Column>,
    rhs: Vec<f64>,
    line: usize,
) -> Result<MipInstance, MpsError> {
    if objective_row.is_none() {
        return Err(MpsError::Malformed { line, message: "no objective (N) row".into() });
    }
    let mut b = InstanceBuilder::new(name);
    let mut row_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows.len()];
    for col in &columns {
        let j = b.add_var(col.cost, col.lower, col.upper, col.integer);
        for &(row, val) in &col.entries {
            row_entries[row].push((j, val));
        }
    }
    for (i, (_, kind)) in rows.iter().enumerate() {
        if let RowKind::Constraint(sense) = kind {
            b.add_row(&row_entries[i], *sense, rhs[i]);
        }
    }
    b.build().map_err(|source| MpsError::Instance { line, source })
}

/// Writes `inst` as MPS; every row becomes an `L` row.
pub fn write_mps(inst: &MipInstance) -> String {
    let name = if inst.name().is_empty() { "INSTANCE".to_string() } else { inst.name().replace(char::is_whitespace, "_") };
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {name}");
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  OBJ");
    for i in 0..inst.num_cons() {
        let _ = writeln!(out, " L  R{i}");
    }
    let _ = writeln!(out, "COLUMNS");
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inst.num_vars()];
    for &(row, col, val) in inst.triplets() {
        by_col[col].push((row, val));
    }
    let mut in_block = false;
    let mut marker = 0;
    for j in 0..inst.num_vars() {
        let integer = inst.integrality()[j];
        if integer != in_block {
            let tag = if integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER{marker:<6}  'MARKER'                 {tag}");
            marker += 1;
            in_block = integer;
        }
        let _ = writeln!(out, "    C{j:<8}  OBJ       {:?}", inst.objective_coeffs()[j]);
        for &(row, val) in &by_col[j] {
            let _ = writeln!(out, "    C{j:<8}  R{row:<8}  {val:?}");
        }
    }
    if in_block {
        let _ = writeln!(out, "    MARKER{marker:<6}  'MARKER'                 'INTEND'");
    }
    let _ = writeln!(out, "RHS");
    for (i, &v) in inst.rhs().iter().enumerate() {
        if v != 0.0 {
            let _ = writeln!(out, "    RHS       R{i:<8}  {v:?}");
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for j in 0..inst.num_vars() {
        let (lo, up) = (inst.lower()[j], inst.upper()[j]);
        if inst.integrality()[j] && lo == 0.0 && up == 1.0 {
            let _ = writeln!(out, " BV BND       C{j}");
            continue;
        }
        if lo == up {
            let _ = writeln!(out, " FX BND       C{j:<8}  {lo:?}");
            continue;
        }
        match (lo.is_finite(), up.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND       C{j}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND       C{j}");
                let _ = writeln!(out, " UP BND       C{j:<8}  {up:?}");
            }
            (true, _) => {
                if lo != 0.0 {
                    let _ = writeln!(out, " LO BND       C{j:<8}  {lo:?}");
                }
                if up.is_finite() {
                    let _ = writeln!(out, " UP BND       C{j:<8}  {up:?}");
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate::gen_set_cover;

    const ONE_VAR: &str = "\
NAME          TINY
ROWS
 N  COST
 L  LIM
COLUMNS
    X         COST      -1.0
    X         LIM       1.0
RHS
    RHS       LIM       1.0
BOUNDS
 BV BND       X
ENDATA
";

    #[test]
    fn hand_written_fixture() {
        let inst = parse_mps(ONE_VAR).unwrap();
        assert_eq!(inst.name(), "TINY");
        assert_eq!((inst.num_vars(), inst.num_cons()), (1, 1));
        assert_eq!(inst.integrality(), &[true]);
        assert_eq!(inst.objective_coeffs(), &[-1.0]);
        assert_eq!((inst.lower()[0], inst.upper()[0]), (0.0, 1.0));
    }

    #[test]
    fn round_trip_generated() {
        let inst = gen_set_cover(10, 20, 0.2, 7).unwrap();
        assert_eq!(parse_mps(&write_mps(&inst)).unwrap(), inst);
    }

    #[test]
    fn ranges_rejected_with_line() {
        let text = ONE_VAR.replace("BOUNDS", "RANGES\n    RNG       LIM       2.0\nBOUNDS");
        assert_eq!(
            parse_mps(&text).unwrap_err(),
            MpsError::UnknownSection { line: 10, section: "RANGES".into() }
        );
    }

    #[test]
    fn error_line_numbers() {
        let dup = ONE_VAR.replace(" L  LIM", " L  LIM\n G  LIM");
        assert_eq!(parse_mps(&dup).unwrap_err(), MpsError::DuplicateRow { line: 5, name: "LIM".into() });

        let unknown = ONE_VAR.replace("    X         LIM       1.0", "    X         NOPE      1.0");
        assert_eq!(
            parse_mps(&unknown).unwrap_err(),
            MpsError::UnknownRowInColumns { line: 7, name: "NOPE".into() }
        );

        let truncated = ONE_VAR.replace("ENDATA\n", "");
        assert_eq!(parse_mps(&truncated).unwrap_err(), MpsError::MissingEndata { line: 12 });
    }

    #[test]
    fn ge_and_eq_rows_normalized() {
        let text = "\
NAME          NORM
ROWS
 N  OBJ
 G  G1
 E  E1
COLUMNS
    MARKER                 'MARKER'                 'INTORG'
    X         OBJ       1.0        G1        2.0
    X         E1        1.0
    MARKER                 'MARKER'                 'INTEND'
    Y         OBJ       1.0        E1        1.0
RHS
    RHS       G1        1.0        E1        3.0
BOUNDS
 UP BND       X         4.0
 MI BND       Y
ENDATA
";
        let inst = parse_mps(text).unwrap();
        assert_eq!(inst.num_cons(), 3);
        assert_eq!(inst.rhs(), &[-1.0, 3.0, -3.0]);
        assert_eq!(inst.integrality(), &[true, false]);
        assert_eq!(inst.lower()[1], f64::NEG_INFINITY);
        assert_eq!(inst.row(0).collect::<Vec<_>>(), vec![(0, -2.0)]);
    }

    #[test]
    fn integer_without_upper_bound_rejected() {
        let text = ONE_VAR.replace(" BV BND       X", " LO BND       X         0.0")
            .replace("    X         COST", "    MARKER                 'MARKER'                 'INTORG'\n    X         COST");
        assert!(matches!(parse_mps(&text), Err(MpsError::Instance { .. })));
    }
}
