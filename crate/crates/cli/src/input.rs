use std::fs;
use std::path::Path;

/// Parses one value per line. Blank lines and text after `#` are ignored.
pub fn parse_lines(text: &str, origin: &str) -> Result<Vec<f64>, String> {
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| format!("{origin}:{}: cannot parse '{line}' as a number", i + 1))?;
        if !v.is_finite() {
            return Err(format!("{origin}:{}: value '{line}' is not finite", i + 1));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(format!("{origin}: no values"));
    }
    Ok(values)
}

/// Reads column `name` of a headed CSV file.
pub fn parse_csv_column(path: &Path, name: &str) -> Result<Vec<f64>, String> {
    let origin = path.display();
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{origin}: {e}"))?;
    let headers = reader.headers().map_err(|e| format!("{origin}: {e}"))?;
    let col = headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| format!("{origin}: no column named '{name}'"))?;
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let rec = rec.map_err(|e| format!("{origin}:{line}: {e}"))?;
        let field = rec.get(col).unwrap_or("").trim();
        let v: f64 = field
            .parse()
            .map_err(|_| format!("{origin}:{line}: cannot parse '{field}' as a number"))?;
        if !v.is_finite() {
            return Err(format!("{origin}:{line}: value '{field}' is not finite"));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(format!("{origin}: column '{name}' has no values"));
    }
    Ok(values)
}

pub fn read_sample(
    input: Option<&Path>,
    values: Option<&str>,
    column: Option<&str>,
) -> Result<Vec<f64>, String> {
    match (input, values) {
        (Some(path), None) => match column {
            Some(name) => parse_csv_column(path, name),
            None => {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                parse_lines(&text, &path.display().to_string())
            }
        },
        (None, Some(inline)) => {
            if column.is_some() {
                return Err("--column needs --input".into());
            }
            parse_lines(&inline.replace(',', "\n"), "--values")
        }
        _ => Err("give exactly one of --input or --values".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks() {
        let v = parse_lines("# header\n1.5\n\n 2 # trailing\n-3e-1\n", "s").unwrap();
        assert_eq!(v, vec![1.5, 2.0, -0.3]);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_lines("1\n2\nx\n", "s").unwrap_err();
        assert!(e.contains("s:3"), "{e}");
        assert!(parse_lines("# nothing\n\n", "s").is_err());
        assert!(parse_lines("inf\n", "s").is_err());
    }
}
