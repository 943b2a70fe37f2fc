use flatcauchy::C64;

/// Parses `3`, `-2.5`, `i`, `-i`, `0.5i`, `0+1i`, `0.3-0.8i`, `1e-3+2e-1i`.
pub fn complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse `{s}` as a complex number");
    let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return Ok(C64::new(num(&t)?, 0.0));
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, ch)| (ch == '+' || ch == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k)
        .last();
    let (re, im) = match split {
        Some(k) => (num(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => num(x)?,
    };
    Ok(C64::new(re, im))
}

/// `a,b` characteristic of a line bundle.
pub fn pair(s: &str) -> Result<(f64, f64), String> {
    let v: Vec<&str> = s.split(',').collect();
    match v.as_slice() {
        [a, b] => Ok((
            a.trim().parse().map_err(|_| format!("bad number `{a}`"))?,
            b.trim().parse().map_err(|_| format!("bad number `{b}`"))?,
        )),
        _ => Err(format!("expected `a,b`, got `{s}`")),
    }
}

/// `name=value` tolerance override.
pub fn tolerance(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.rsplit_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    Ok((k.to_string(), v.parse().map_err(|_| format!("bad tolerance `{v}`"))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        let c = |re, im| C64::new(re, im);
        assert_eq!(complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(complex("0+1i").unwrap(), c(0.0, 1.0));
        assert_eq!(complex("0.3-0.8i").unwrap(), c(0.3, -0.8));
        assert_eq!(complex("2.5i").unwrap(), c(0.0, 2.5));
        assert_eq!(complex("-4").unwrap(), c(-4.0, 0.0));
        assert_eq!(complex("1e-3+2e-1i").unwrap(), c(1e-3, 0.2));
        assert_eq!(complex("1e-3").unwrap(), c(1e-3, 0.0));
        assert!(complex("x").is_err());
        assert!(complex("1+").is_err());
    }
}
