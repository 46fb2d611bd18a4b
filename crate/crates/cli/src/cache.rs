//! Series cache under `UIPT_LAB_CACHE_DIR`, stored in the series JSON schema.

use std::path::PathBuf;

use uipt_core::{Ring, Series, SeriesJson};

pub const ENV: &str = "UIPT_LAB_CACHE_DIR";

fn path(name: &str) -> Option<PathBuf> {
    std::env::var_os(ENV).map(|d| PathBuf::from(d).join(format!("{name}.json")))
}

/// Load `name` if a cached copy reaches `order`, otherwise compute and store.
/// Cache problems are reported on stderr and never change the result.
pub fn series<R: Ring, E>(
    name: &str,
    order: usize,
    compute: impl FnOnce() -> Result<Series<R>, E>,
) -> Result<Series<R>, E> {
    let Some(p) = path(name) else {
        return compute();
    };
    if let Ok(text) = std::fs::read_to_string(&p) {
        match serde_json::from_str::<SeriesJson>(&text).map(|j| Series::<R>::from_json(&j)) {
            Ok(Ok(s)) if s.order() >= order => return Ok(s.truncate(order)),
            Ok(Ok(_)) => {}
            _ => eprintln!("cache: ignoring unreadable {}", p.display()),
        }
    }
    let s = compute()?;
    let stored = std::fs::create_dir_all(p.parent().expect("joined path"))
        .and_then(|_| std::fs::write(&p, serde_json::to_string(&s.to_json()).expect("serializable")));
    if let Err(e) = stored {
        eprintln!("cache: could not write {}: {e}", p.display());
    }
    Ok(s)
}
