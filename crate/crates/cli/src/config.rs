use std::fs;

/// Keys a config file may set; each maps onto the global flag of the same name.
pub const KEYS: [&str; 4] = ["cg", "seed", "format", "out"];

/// Expands `--config <path>` into the global flags it stands for. The
/// expanded flags go right after the program name, so anything given
/// explicitly on the command line overrides them.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().ok_or("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut flags = parse(&text)?;
    let mut out = Vec::with_capacity(rest.len() + flags.len());
    let mut rest = rest.into_iter();
    out.extend(rest.next());
    out.append(&mut flags);
    out.extend(rest);
    Ok(out)
}

pub fn parse(text: &str) -> Result<Vec<String>, String> {
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", n + 1))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(format!("config line {}: unknown key {key:?} (allowed: {})", n + 1, KEYS.join(", ")));
        }
        flags.push(format!("--{key}={}", value.trim()));
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let flags = parse("# run\ncg = 10\n\nseed=3\n").unwrap();
        assert_eq!(flags, vec!["--cg=10", "--seed=3"]);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse("resolution=5").is_err());
        assert!(parse("cg 10").is_err());
    }

    #[test]
    fn flags_precede_command_line() {
        let dir = std::env::temp_dir().join(format!("cuspmap-config-{}", std::process::id()));
        fs::write(&dir, "cg=10\n").unwrap();
        let args = vec!["cuspmap".into(), "--config".into(), dir.display().to_string(), "verify".into()];
        let out = expand(args).unwrap();
        fs::remove_file(&dir).unwrap();
        assert_eq!(out, vec!["cuspmap", "--cg=10", "verify"]);
    }
}
