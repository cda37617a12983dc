//! Configurations, Boolean maps and update strategies.
//!
//! A configuration is a vector x = (x_1, ..., x_n) of Booleans. A map
//! f: B^n -> B^n evolves it asynchronously: at each time step exactly one
//! component, named by the current strategy term, is replaced by the
//! corresponding component of f while all others are frozen. Component 1 is
//! the most significant bit of the packed value, so the configuration 0011
//! with n = 4 has x_1 = x_2 = 0 and value 3.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Widest supported system; tables are indexed by packed configuration value.
pub const MAX_COMPONENTS: usize = 16;

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_COMPONENTS {
        return Err(Error::UnsupportedWidth { n });
    }
    Ok(())
}

/// A Boolean configuration of fixed width, packed into an integer.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolConfig {
    n: usize,
    value: u16,
}

impl BoolConfig {
    pub fn new(n: usize, value: u16) -> Result<Self> {
        check_width(n)?;
        if n < 16 && value >> n != 0 {
            return Err(Error::ValueOutOfRange {
                value: value as u64,
                n,
            });
        }
        Ok(Self { n, value })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self) -> u16 {
        self.value
    }

    /// Component i, 1-based; component 1 is the most significant bit.
    pub fn bit(&self, i: usize) -> Result<bool> {
        if i == 0 || i > self.n {
            return Err(Error::ComponentOutOfRange {
                component: i,
                n: self.n,
            });
        }
        Ok(self.value >> (self.n - i) & 1 == 1)
    }

    /// Copy of self with component i set to `bit`.
    pub fn with_bit(&self, i: usize, bit: bool) -> Result<Self> {
        if i == 0 || i > self.n {
            return Err(Error::ComponentOutOfRange {
                component: i,
                n: self.n,
            });
        }
        let mask = 1u16 << (self.n - i);
        let value = if bit {
            self.value | mask
        } else {
            self.value & !mask
        };
        Ok(Self { n: self.n, value })
    }

    pub fn bits(&self) -> Vec<bool> {
        (1..=self.n).map(|i| self.bit(i).unwrap()).collect()
    }

    /// Parses a bit string such as "0011"; the width is the string length.
    pub fn parse(s: &str) -> Result<Self> {
        let n = s.len();
        check_width(n).map_err(|_| Error::InvalidBitString(s.to_string()))?;
        let mut value = 0u16;
        for c in s.chars() {
            value <<= 1;
            match c {
                '0' => {}
                '1' => value |= 1,
                _ => return Err(Error::InvalidBitString(s.to_string())),
            }
        }
        Ok(Self { n, value })
    }
}

impl fmt::Display for BoolConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.value, width = self.n)
    }
}

impl fmt::Debug for BoolConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoolConfig({self})")
    }
}

/// A finite sequence of component indices, each in 1..=n for the system it
/// drives. The width is checked at construction and wherever a strategy
/// meets a map.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Strategy {
    terms: Vec<u8>,
}

impl Strategy {
    pub fn new(terms: impl Into<Vec<u8>>, n: usize) -> Result<Self> {
        check_width(n)?;
        let terms = terms.into();
        for &t in &terms {
            if t == 0 || t as usize > n {
                return Err(Error::ComponentOutOfRange {
                    component: t as usize,
                    n,
                });
            }
        }
        Ok(Self { terms })
    }

    pub fn empty() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[u8] {
        &self.terms
    }

    /// Term at position t, 0-based.
    pub fn term(&self, t: usize) -> Option<u8> {
        self.terms.get(t).copied()
    }

    pub fn first(&self) -> Result<u8> {
        self.terms.first().copied().ok_or(Error::EmptyStrategy)
    }

    /// The strategy with its first term removed.
    pub fn shifted(&self) -> Result<Self> {
        if self.terms.is_empty() {
            return Err(Error::EmptyStrategy);
        }
        Ok(Self {
            terms: self.terms[1..].to_vec(),
        })
    }

    /// Parses a comma-separated list of 1-based components, e.g. "1,2,3".
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        check_width(n)?;
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let mut terms = Vec::new();
        for part in s.split(',') {
            let t: usize = part.trim().parse().map_err(|_| Error::InvalidStrategy {
                text: s.to_string(),
                reason: format!("`{}` is not a component index", part.trim()),
            })?;
            if t == 0 || t > n {
                return Err(Error::InvalidStrategy {
                    text: s.to_string(),
                    reason: format!("component {t} out of range 1..={n}"),
                });
            }
            terms.push(t as u8);
        }
        Ok(Self { terms })
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for t in &self.terms {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
            first = false;
        }
        Ok(())
    }
}

/// A point of the iteration system: the pending strategy paired with the
/// current configuration.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SystemPoint {
    pub strategy: Strategy,
    pub config: BoolConfig,
}

impl SystemPoint {
    pub fn new(strategy: Strategy, config: BoolConfig) -> Self {
        Self { strategy, config }
    }
}

/// A map f: B^n -> B^n stored as a full lookup table over packed values.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BooleanMap {
    n: usize,
    table: Vec<u16>,
}

/// Lookup table of the non-chaotic worked example on four components.
const EXAMPLE_F: [u16; 16] = [0, 0, 2, 3, 13, 13, 6, 3, 8, 9, 10, 11, 8, 13, 14, 15];

/// Lookup table of the chaotic worked example on four components.
const EXAMPLE_G: [u16; 16] = [11, 14, 13, 14, 11, 10, 1, 8, 7, 6, 5, 4, 3, 2, 1, 0];

impl BooleanMap {
    pub fn new(n: usize, table: Vec<u16>) -> Result<Self> {
        check_width(n)?;
        let size = 1usize << n;
        if table.len() != size {
            return Err(Error::InvalidMapFile(format!(
                "table has {} entries, expected {size}",
                table.len()
            )));
        }
        if n < 16 {
            for &v in &table {
                if v >> n != 0 {
                    return Err(Error::TableEntryOutOfRange { value: v as u64, n });
                }
            }
        }
        Ok(Self { n, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[u16] {
        &self.table
    }

    pub fn config_count(&self) -> usize {
        1 << self.n
    }

    /// The synchronous image f(x).
    pub fn apply(&self, x: BoolConfig) -> Result<BoolConfig> {
        self.check_dims(x)?;
        Ok(BoolConfig {
            n: self.n,
            value: self.table[x.value as usize],
        })
    }

    /// Component f_i(x) of the synchronous image.
    pub fn component(&self, i: usize, x: BoolConfig) -> Result<bool> {
        self.apply(x)?.bit(i)
    }

    /// One asynchronous step: component s is replaced by f_s(x), all other
    /// components are frozen.
    pub fn step(&self, s: usize, x: BoolConfig) -> Result<BoolConfig> {
        let fx = self.apply(x)?;
        x.with_bit(s, fx.bit(s)?)
    }

    /// The first m configurations of the orbit of x0 under the strategy:
    /// element t is the state after t+1 steps.
    pub fn iterate(
        &self,
        x0: BoolConfig,
        strategy: &Strategy,
        m: usize,
    ) -> Result<Vec<BoolConfig>> {
        self.check_dims(x0)?;
        if m > strategy.len() {
            return Err(Error::StrategyTooShort {
                requested: m,
                available: strategy.len(),
            });
        }
        let mut orbit = Vec::with_capacity(m);
        let mut x = x0;
        for t in 0..m {
            x = self.step(strategy.term(t).unwrap() as usize, x)?;
            orbit.push(x);
        }
        Ok(orbit)
    }

    /// One step of the iteration system: consumes the first strategy term
    /// and advances the configuration by it.
    pub fn system_step(&self, p: &SystemPoint) -> Result<SystemPoint> {
        let s = p.strategy.first()?;
        Ok(SystemPoint {
            strategy: p.strategy.shifted()?,
            config: self.step(s as usize, p.config)?,
        })
    }

    /// Configurations with f(x) = x.
    pub fn fixed_points(&self) -> Vec<BoolConfig> {
        self.table
            .iter()
            .enumerate()
            .filter(|&(v, &fv)| fv as usize == v)
            .map(|(v, _)| BoolConfig {
                n: self.n,
                value: v as u16,
            })
            .collect()
    }

    /// The componentwise negation map.
    pub fn negation(n: usize) -> Result<Self> {
        check_width(n)?;
        let size = 1u32 << n;
        let mask = (size - 1) as u16;
        Ok(Self {
            n,
            table: (0..size).map(|v| v as u16 ^ mask).collect(),
        })
    }

    /// Negates the first component and shifts the rest down by one index:
    /// f(x) = (not x_1, x_1, ..., x_{n-1}).
    pub fn shifted_negation(n: usize) -> Result<Self> {
        check_width(n)?;
        let size = 1u32 << n;
        let top = 1u16 << (n - 1);
        let table = (0..size)
            .map(|v| {
                let v = v as u16;
                let shifted = v >> 1;
                if v & top == 0 {
                    shifted | top
                } else {
                    shifted
                }
            })
            .collect();
        Ok(Self { n, table })
    }

    /// Resolves a builtin name: `f0(n)` is the negation map, `f1(n)` the
    /// shifted negation, `example_f` and `example_g` the four-component worked
    /// examples (non-chaotic and chaotic respectively).
    pub fn builtin(name: &str) -> Result<Self> {
        let parse_width = |inner: &str| -> Result<usize> {
            inner
                .parse()
                .map_err(|_| Error::UnknownBuiltin(name.to_string()))
        };
        match name {
            "example_f" => Self::new(4, EXAMPLE_F.to_vec()),
            "example_g" => Self::new(4, EXAMPLE_G.to_vec()),
            _ => {
                if let Some(inner) = name.strip_prefix("f0(").and_then(|r| r.strip_suffix(')')) {
                    Self::negation(parse_width(inner)?)
                        .map_err(|_| Error::UnknownBuiltin(name.to_string()))
                } else if let Some(inner) =
                    name.strip_prefix("f1(").and_then(|r| r.strip_suffix(')'))
                {
                    Self::shifted_negation(parse_width(inner)?)
                        .map_err(|_| Error::UnknownBuiltin(name.to_string()))
                } else {
                    Err(Error::UnknownBuiltin(name.to_string()))
                }
            }
        }
    }

    /// Resolves a map given on the command line or in a config file: first
    /// as a builtin name, otherwise as a path to a map file.
    pub fn resolve(spec: &str) -> Result<Self> {
        match Self::builtin(spec) {
            Ok(map) => Ok(map),
            Err(Error::UnknownBuiltin(_)) if Path::new(spec).exists() => Self::from_map_file(spec),
            Err(e) => Err(e),
        }
    }

    /// Parses the two-line map text format: the width on the first line and
    /// the 2^n table values, in configuration order, on the second.
    pub fn parse_map_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::InvalidMapFile("empty file".to_string()))?
            .trim()
            .parse()
            .map_err(|_| Error::InvalidMapFile("first line must be the component count".into()))?;
        check_width(n).map_err(|_| {
            Error::InvalidMapFile(format!(
                "component count {n} outside supported range 1..=16"
            ))
        })?;
        let row = lines
            .next()
            .ok_or_else(|| Error::InvalidMapFile("missing table line".to_string()))?;
        if lines.next().is_some() {
            return Err(Error::InvalidMapFile("trailing content after table".into()));
        }
        let mut table = Vec::with_capacity(1 << n);
        for tok in row.split_whitespace() {
            let v: u64 = tok
                .parse()
                .map_err(|_| Error::InvalidMapFile(format!("`{tok}` is not a table entry")))?;
            if v >= 1 << n {
                return Err(Error::TableEntryOutOfRange { value: v, n });
            }
            table.push(v as u16);
        }
        Self::new(n, table)
    }

    pub fn from_map_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_map_text(&std::fs::read_to_string(path)?)
    }

    pub fn map_text(&self) -> String {
        let row: Vec<String> = self.table.iter().map(|v| v.to_string()).collect();
        format!("{}\n{}\n", self.n, row.join(" "))
    }

    pub fn write_map_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.map_text())?;
        Ok(())
    }

    fn check_dims(&self, x: BoolConfig) -> Result<()> {
        if x.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.n,
            });
        }
        Ok(())
    }
}
