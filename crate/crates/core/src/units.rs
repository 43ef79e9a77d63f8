//! Size and duration parsing for configuration values.
//!
//! Sizes use binary suffixes (`KiB`, `MiB`, `GiB`, `TiB`); a bare number is
//! bytes. Durations accept `ms`, `s`, and `m`.

use std::time::Duration;

/// Parses a byte size like `617 MiB` or `4096`.
pub fn parse_size(text: &str) -> Result<u64, String> {
    let trimmed = text.trim();
    let split = trimmed.char_indices().find(|(_, c)| c.is_ascii_alphabetic());
    let (num, mult) = match split {
        Some((idx, _)) => {
            let (value, unit) = trimmed.split_at(idx);
            let mult: u64 = match unit.trim() {
                "B" => 1,
                "KiB" => 1 << 10,
                "MiB" => 1 << 20,
                "GiB" => 1 << 30,
                "TiB" => 1 << 40,
                other => return Err(format!("unknown size unit `{other}`")),
            };
            (value.trim(), mult)
        }
        None => (trimmed, 1),
    };
    // Fractional sizes like `1.5 GiB` are accepted and floored to bytes.
    if num.contains('.') {
        let value: f64 = num.parse().map_err(|_| format!("bad size `{trimmed}`"))?;
        if !(value >= 0.0 && value.is_finite()) {
            return Err(format!("size out of range `{trimmed}`"));
        }
        return Ok((value * mult as f64) as u64);
    }
    let value: u64 = num.parse().map_err(|_| format!("bad size `{trimmed}`"))?;
    value
        .checked_mul(mult)
        .ok_or_else(|| format!("size overflows `{trimmed}`"))
}

/// Formats a byte count with the largest exact binary suffix.
pub fn format_size(bytes: u64) -> String {
    for (mult, unit) in [(1u64 << 40, "TiB"), (1 << 30, "GiB"), (1 << 20, "MiB"), (1 << 10, "KiB")]
    {
        if bytes >= mult && bytes % mult == 0 {
            return format!("{} {}", bytes / mult, unit);
        }
    }
    format!("{bytes}")
}

/// Parses a duration like `500ms`, `2s`, or `1m`.
pub fn parse_duration(text: &str) -> Result<Duration, String> {
    let trimmed = text.trim();
    let split = trimmed.char_indices().find(|(_, c)| c.is_ascii_alphabetic());
    let (num, unit) = match split {
        Some((idx, _)) => {
            let (v, u) = trimmed.split_at(idx);
            (v.trim(), u.trim())
        }
        None => (trimmed, "s"),
    };
    let value: f64 = num
        .parse()
        .map_err(|_| format!("bad duration `{trimmed}`"))?;
    if !(value >= 0.0 && value.is_finite()) {
        return Err(format!("duration out of range `{trimmed}`"));
    }
    let secs = match unit {
        "ms" => value / 1000.0,
        "s" => value,
        "m" => value * 60.0,
        other => return Err(format!("unknown duration unit `{other}`")),
    };
    Ok(Duration::from_secs_f64(secs))
}

/// Renders a duration in the most compact unit that stays exact.
pub fn format_duration(d: Duration) -> String {
    let ms = d.as_millis();
    if ms % 60_000 == 0 && ms != 0 {
        format!("{}m", ms / 60_000)
    } else if ms % 1000 == 0 {
        format!("{}s", ms / 1000)
    } else {
        format!("{ms}ms")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("4096").unwrap(), 4096);
        assert_eq!(parse_size("617 MiB").unwrap(), 617 << 20);
        assert_eq!(parse_size("617MiB").unwrap(), 617 << 20);
        assert_eq!(parse_size("1 GiB").unwrap(), 1 << 30);
        assert_eq!(parse_size("1.5 KiB").unwrap(), 1536);
        assert!(parse_size("10 MB").is_err());
        assert!(parse_size("x").is_err());
    }

    #[test]
    fn size_round_trip() {
        for v in [0, 1, 1024, 617 << 20, (1 << 30) + 5] {
            assert_eq!(parse_size(&format_size(v)).unwrap(), v);
        }
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration("500ms").unwrap(), Duration::from_millis(500));
        assert_eq!(parse_duration("2s").unwrap(), Duration::from_secs(2));
        assert_eq!(parse_duration("1m").unwrap(), Duration::from_secs(60));
        assert_eq!(parse_duration("3").unwrap(), Duration::from_secs(3));
        assert!(parse_duration("5h").is_err());
    }

    #[test]
    fn duration_round_trip() {
        for d in [Duration::from_millis(250), Duration::from_secs(2), Duration::from_secs(120)] {
            assert_eq!(parse_duration(&format_duration(d)).unwrap(), d);
        }
    }
}
