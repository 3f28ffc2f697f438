use crate::error::{CliError, Result};

/// Splits on commas that are not inside brackets or quotes.
fn split_values(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let (mut depth, mut quoted) = (0i32, false);
    for c in s.chars() {
        match c {
            '"' => quoted = !quoted,
            '[' | '{' if !quoted => depth += 1,
            ']' | '}' if !quoted => depth -= 1,
            ',' if !quoted && depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out.into_iter().map(|v| v.trim().to_string()).collect()
}

/// Cartesian product of `key=v1,v2,...` axes as lists of `key=v`
/// overrides, first axis varying slowest.
pub fn sweep_points(axes: &[String]) -> Result<Vec<Vec<String>>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        let (key, values) = axis
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("sweep {axis:?} is not key=v1,v2")))?;
        let values = split_values(values);
        if values.iter().any(String::is_empty) {
            return Err(CliError::Config(format!("sweep {axis:?} has an empty value")));
        }
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(format!("{}={v}", key.trim()));
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Directory name for one sweep point.
pub fn point_name(point: &[String]) -> String {
    if point.is_empty() {
        return "base".to_string();
    }
    point
        .iter()
        .map(|o| {
            o.chars()
                .map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '-' })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("__")
}
