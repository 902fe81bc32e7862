//! On-disk persistence of computed levels.
//!
//! A cache file is a bincode container with a format version and the
//! fingerprint of the symbol table that produced it. Loading refuses files
//! whose version or fingerprint differs.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bincode::Options;
use serde::{Deserialize, Serialize};

use crate::engine::{Level, MemoTable};
use crate::error::{Error, Result};
use crate::geometry::{Coords, SymbolTable};

pub const CACHE_VERSION: u32 = 1;
const MAGIC: &str = "rw-spectral-levels";

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "RW_SPECTRAL_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct CacheFile {
    magic: String,
    version: u32,
    fingerprint: String,
    /// `None` for levels that were not held when saving.
    levels: Vec<Option<Level>>,
}

/// Default cache directory from [`CACHE_DIR_ENV`], if set.
pub fn default_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from)
}

/// File for `coords` inside `dir`, named after the symbol fingerprint.
pub fn cache_path(dir: &Path, coords: Coords) -> PathBuf {
    let fp = coords.symbols().fingerprint();
    dir.join(format!("{}-{}.bin", coords.name(), &fp[..16]))
}

/// Writes every level currently held by `memo`.
pub fn save(memo: &MemoTable, path: &Path) -> Result<()> {
    let file = CacheFile {
        magic: MAGIC.into(),
        version: CACHE_VERSION,
        fingerprint: memo.symbol_hash().to_string(),
        levels: memo.stored_levels().to_vec(),
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        bincode::serialize_into(&mut w, &file).map_err(|e| Error::Cache(e.to_string()))?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a cache file for `table`. Fails on version or fingerprint mismatch.
pub fn load(table: SymbolTable, path: &Path) -> Result<MemoTable> {
    let f = fs::File::open(path)?;
    // a length prefix can never exceed the file size
    let limit = f.metadata()?.len();
    let file: CacheFile = bincode::DefaultOptions::new()
        .with_fixint_encoding()
        .allow_trailing_bytes()
        .with_limit(limit)
        .deserialize_from(BufReader::new(f))
        .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
    if file.magic != MAGIC {
        return Err(Error::Cache(format!("{} is not a level cache", path.display())));
    }
    if file.version != CACHE_VERSION {
        return Err(Error::Cache(format!("cache version {} != {CACHE_VERSION}", file.version)));
    }
    let fp = table.fingerprint();
    if file.fingerprint != fp {
        return Err(Error::Cache(format!("symbol fingerprint {} != {fp}", file.fingerprint)));
    }
    let top = file.levels.len();
    if top == 0 || file.levels[top - 1].is_none() || (top >= 2 && file.levels[top - 2].is_none()) {
        return Err(Error::Cache("the two highest levels must be present".into()));
    }
    Ok(MemoTable::from_levels(table, file.levels))
}

/// Loads `path` if it exists, otherwise starts from level 0.
pub fn load_or_new(coords: Coords, path: &Path) -> Result<(MemoTable, bool)> {
    if path.exists() {
        Ok((load(coords.symbols(), path)?, true))
    } else {
        Ok((MemoTable::new(coords.symbols()), false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Retention;

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = cache_path(dir.path(), Coords::Hopf);
        let mut memo = MemoTable::new(Coords::Hopf.symbols());
        memo.ensure(4);
        save(&memo, &path).unwrap();
        let mut loaded = load(Coords::Hopf.symbols(), &path).unwrap();
        assert_eq!(loaded.level_complete(), 4);
        for n in 0..=4 {
            assert_eq!(loaded.level(n), memo.level(n));
        }
        memo.compute_level(5);
        loaded.compute_level(5);
        assert_eq!(
            bincode::serialize(loaded.level(5).unwrap()).unwrap(),
            bincode::serialize(memo.level(5).unwrap()).unwrap()
        );
    }

    #[test]
    fn window_tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let mut memo = MemoTable::new(Coords::Spherical.symbols()).with_retention(Retention::Window);
        memo.ensure(4);
        save(&memo, &path).unwrap();
        let loaded = load(Coords::Spherical.symbols(), &path).unwrap();
        assert!(loaded.level(2).is_none());
        assert_eq!(loaded.level(4), memo.level(4));
    }

    #[test]
    fn fingerprint_mismatch_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.bin");
        let mut memo = MemoTable::new(Coords::Hopf.symbols());
        memo.ensure(2);
        save(&memo, &path).unwrap();
        let err = load(Coords::Spherical.symbols(), &path).err().unwrap();
        assert!(matches!(err, Error::Cache(_)), "{err}");
        fs::write(&path, b"garbage").unwrap();
        assert!(load(Coords::Hopf.symbols(), &path).is_err());
    }
}
