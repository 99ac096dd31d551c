use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::hamiltonian::Spin;

/// Tolerance beyond which two records for the same integral are inconsistent.
const DUPLICATE_TOLERANCE: f64 = 1e-10;

/// Integrals over spatial molecular orbitals as stored in an FCIDUMP file.
///
/// Two-electron integrals use chemists' notation `(pq|rs)`. For unrestricted
/// files the alpha-alpha, beta-beta and alpha-beta blocks are kept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialIntegrals {
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub ms2: i32,
    pub core_energy: f64,
    h_alpha: Vec<f64>,
    h_beta: Option<Vec<f64>>,
    eri_aa: Vec<f64>,
    eri_bb: Option<Vec<f64>>,
    eri_ab: Option<Vec<f64>>,
}

impl SpatialIntegrals {
    /// Restricted integrals from dense arrays (`h` is `n*n`, `eri` is `n^4`, row-major).
    pub fn restricted(
        n_orbitals: usize,
        n_electrons: usize,
        ms2: i32,
        core_energy: f64,
        h: Vec<f64>,
        eri: Vec<f64>,
    ) -> Result<Self> {
        let n = n_orbitals;
        if h.len() != n * n {
            return Err(Error::SizeMismatch {
                expected: n * n,
                found: h.len(),
            });
        }
        if eri.len() != n * n * n * n {
            return Err(Error::SizeMismatch {
                expected: n * n * n * n,
                found: eri.len(),
            });
        }
        if n_electrons > 2 * n {
            return Err(Error::InvalidInput(format!(
                "{n_electrons} electrons do not fit in {n} orbitals"
            )));
        }
        Ok(SpatialIntegrals {
            n_orbitals,
            n_electrons,
            ms2,
            core_energy,
            h_alpha: h,
            h_beta: None,
            eri_aa: eri,
            eri_bb: None,
            eri_ab: None,
        })
    }

    /// Zero integrals with only a core energy.
    pub fn empty(n_orbitals: usize, n_electrons: usize, ms2: i32, core_energy: f64) -> Self {
        let n = n_orbitals;
        SpatialIntegrals {
            n_orbitals,
            n_electrons,
            ms2,
            core_energy,
            h_alpha: vec![0.0; n * n],
            h_beta: None,
            eri_aa: vec![0.0; n * n * n * n],
            eri_bb: None,
            eri_ab: None,
        }
    }

    pub fn is_unrestricted(&self) -> bool {
        self.h_beta.is_some()
    }

    #[inline]
    fn idx2(&self, p: usize, q: usize) -> usize {
        p * self.n_orbitals + q
    }

    #[inline]
    fn idx4(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        let n = self.n_orbitals;
        ((p * n + q) * n + r) * n + s
    }

    /// One-electron integral `h_pq` for the given spin.
    #[inline]
    pub fn h(&self, spin: Spin, p: usize, q: usize) -> f64 {
        let i = self.idx2(p, q);
        match (spin, &self.h_beta) {
            (Spin::Beta, Some(hb)) => hb[i],
            _ => self.h_alpha[i],
        }
    }

    /// Two-electron integral `(pq|rs)` where `p, q` carry `spin_pq` and `r, s` carry `spin_rs`.
    #[inline]
    pub fn eri(&self, spin_pq: Spin, spin_rs: Spin, p: usize, q: usize, r: usize, s: usize) -> f64 {
        if !self.is_unrestricted() {
            return self.eri_aa[self.idx4(p, q, r, s)];
        }
        match (spin_pq, spin_rs) {
            (Spin::Alpha, Spin::Alpha) => self.eri_aa[self.idx4(p, q, r, s)],
            (Spin::Beta, Spin::Beta) => self.eri_bb.as_ref().unwrap()[self.idx4(p, q, r, s)],
            (Spin::Alpha, Spin::Beta) => self.eri_ab.as_ref().unwrap()[self.idx4(p, q, r, s)],
            (Spin::Beta, Spin::Alpha) => self.eri_ab.as_ref().unwrap()[self.idx4(r, s, p, q)],
        }
    }

    /// Keep only the first `n_keep` orbitals. Removing empty orbitals needs no folding.
    pub fn truncate(&self, n_keep: usize) -> Result<Self> {
        if n_keep > self.n_orbitals || 2 * n_keep < self.n_electrons {
            return Err(Error::InvalidInput(format!(
                "cannot keep {n_keep} of {} orbitals with {} electrons",
                self.n_orbitals, self.n_electrons
            )));
        }
        let m = n_keep;
        let cut2 = |v: &Vec<f64>| {
            let mut out = Vec::with_capacity(m * m);
            for p in 0..m {
                for q in 0..m {
                    out.push(v[self.idx2(p, q)]);
                }
            }
            out
        };
        let cut4 = |v: &Vec<f64>| {
            let mut out = Vec::with_capacity(m * m * m * m);
            for p in 0..m {
                for q in 0..m {
                    for r in 0..m {
                        for s in 0..m {
                            out.push(v[self.idx4(p, q, r, s)]);
                        }
                    }
                }
            }
            out
        };
        Ok(SpatialIntegrals {
            n_orbitals: m,
            n_electrons: self.n_electrons,
            ms2: self.ms2,
            core_energy: self.core_energy,
            h_alpha: cut2(&self.h_alpha),
            h_beta: self.h_beta.as_ref().map(cut2),
            eri_aa: cut4(&self.eri_aa),
            eri_bb: self.eri_bb.as_ref().map(cut4),
            eri_ab: self.eri_ab.as_ref().map(cut4),
        })
    }
}

/// Which block of an unrestricted file a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    EriAA,
    EriBB,
    EriAB,
    HA,
    HB,
    Core,
}

const UHF_BLOCKS: [Block; 6] = [
    Block::EriAA,
    Block::EriBB,
    Block::EriAB,
    Block::HA,
    Block::HB,
    Block::Core,
];

struct Slot {
    values: Vec<f64>,
    filled: Vec<bool>,
}

impl Slot {
    fn new(len: usize) -> Self {
        Slot {
            values: vec![0.0; len],
            filled: vec![false; len],
        }
    }

    fn set(&mut self, idx: usize, value: f64, line: usize) -> Result<()> {
        if self.filled[idx] {
            let old = self.values[idx];
            if (old - value).abs() > DUPLICATE_TOLERANCE {
                return Err(Error::parse(
                    line,
                    format!("inconsistent duplicate integral: {old} vs {value}"),
                ));
            }
            return Ok(());
        }
        self.values[idx] = value;
        self.filled[idx] = true;
        Ok(())
    }
}

struct Header {
    norb: usize,
    nelec: usize,
    ms2: i32,
    iuhf: bool,
}

fn parse_header(text: &str, end_line: usize) -> Result<Header> {
    let body = text
        .replace('=', " = ")
        .replace(',', " ")
        .replace("&END", " ")
        .replace("&end", " ");
    let body = body.trim_start();
    let body = body
        .strip_prefix("&FCI")
        .or_else(|| body.strip_prefix("&fci"))
        .ok_or_else(|| Error::parse(1, "header must start with &FCI"))?;
    let tokens: Vec<&str> = body
        .split_whitespace()
        .filter(|t| *t != "/")
        .collect();
    let mut fields: HashMap<String, Vec<String>> = HashMap::new();
    let mut key: Option<String> = None;
    let mut i = 0;
    while i < tokens.len() {
        if i + 1 < tokens.len() && tokens[i + 1] == "=" {
            let k = tokens[i].to_ascii_uppercase();
            fields.insert(k.clone(), Vec::new());
            key = Some(k);
            i += 2;
            continue;
        }
        match &key {
            Some(k) => fields.get_mut(k).unwrap().push(tokens[i].to_string()),
            None => {
                return Err(Error::parse(
                    end_line,
                    format!("unexpected header token '{}'", tokens[i]),
                ))
            }
        }
        i += 1;
    }
    let scalar = |name: &str| -> Result<Option<i64>> {
        match fields.get(name) {
            None => Ok(None),
            Some(v) if v.len() == 1 => v[0]
                .trim_end_matches('/')
                .parse::<i64>()
                .map(Some)
                .map_err(|_| Error::parse(end_line, format!("bad value for {name}: {}", v[0]))),
            Some(v) => Err(Error::parse(
                end_line,
                format!("expected one value for {name}, found {}", v.len()),
            )),
        }
    };
    let norb = scalar("NORB")?.ok_or_else(|| Error::parse(end_line, "header lacks NORB"))?;
    let nelec = scalar("NELEC")?.ok_or_else(|| Error::parse(end_line, "header lacks NELEC"))?;
    let ms2 = scalar("MS2")?.unwrap_or(0);
    let iuhf = scalar("IUHF")?.unwrap_or(0);
    if norb < 0 || nelec < 0 {
        return Err(Error::parse(end_line, "NORB and NELEC must be non-negative"));
    }
    if nelec > 2 * norb {
        return Err(Error::parse(
            end_line,
            format!("NELEC={nelec} exceeds 2*NORB={}", 2 * norb),
        ));
    }
    Ok(Header {
        norb: norb as usize,
        nelec: nelec as usize,
        ms2: ms2 as i32,
        iuhf: iuhf != 0,
    })
}

fn parse_value(token: &str) -> Option<f64> {
    token.replace(['D', 'd'], "E").parse::<f64>().ok()
}

/// Parse FCIDUMP text.
pub fn parse_fcidump(text: &str) -> Result<SpatialIntegrals> {
    let mut lines = text.lines().enumerate();
    let mut header_text = String::new();
    let mut header_end = 0;
    let mut terminated = false;
    for (no, line) in lines.by_ref() {
        header_text.push_str(line);
        header_text.push('\n');
        header_end = no + 1;
        let trimmed = line.trim();
        let upper = trimmed.to_ascii_uppercase();
        if upper.contains("&END") || trimmed == "/" || (no > 0 && trimmed.ends_with('/')) {
            terminated = true;
            break;
        }
        if no == 0 && upper.starts_with("&FCI") && trimmed.ends_with('/') {
            terminated = true;
            break;
        }
    }
    if !terminated {
        return Err(Error::parse(header_end.max(1), "unterminated FCIDUMP header"));
    }
    let header = parse_header(&header_text, header_end)?;
    let n = header.norb;

    let mut core: Option<(f64, usize)> = None;
    let mut h_a = Slot::new(n * n);
    let mut h_b = Slot::new(n * n);
    let mut eri_aa = Slot::new(n * n * n * n);
    let mut eri_bb = Slot::new(if header.iuhf { n * n * n * n } else { 0 });
    let mut eri_ab = Slot::new(if header.iuhf { n * n * n * n } else { 0 });
    let mut block = 0usize;

    let i2 = |p: usize, q: usize| p * n + q;
    let i4 = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;

    for (no, line) in lines {
        let line_no = no + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(Error::parse(
                line_no,
                format!("expected 'value i j k l', found {} fields", parts.len()),
            ));
        }
        let value = parse_value(parts[0])
            .ok_or_else(|| Error::parse(line_no, format!("bad value '{}'", parts[0])))?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&parts[1..]) {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad index '{tok}'")))?;
            if v < 0 || v as usize > n {
                return Err(Error::parse(
                    line_no,
                    format!("index {v} out of range [1, {n}]"),
                ));
            }
            *slot = v as usize;
        }
        let [i, j, k, l] = idx;
        let all_zero = i == 0 && j == 0 && k == 0 && l == 0;

        if header.iuhf {
            if all_zero {
                if UHF_BLOCKS.get(block) == Some(&Block::Core) {
                    set_core(&mut core, value, line_no)?;
                } else {
                    block += 1;
                }
                continue;
            }
            match UHF_BLOCKS.get(block) {
                Some(Block::EriAA) | Some(Block::EriBB) | Some(Block::EriAB) => {
                    if i == 0 || j == 0 || k == 0 || l == 0 {
                        return Err(Error::parse(
                            line_no,
                            "two-electron record with a zero index",
                        ));
                    }
                    let (p, q, r, s) = (i - 1, j - 1, k - 1, l - 1);
                    match UHF_BLOCKS[block] {
                        Block::EriAA => set_eri8(&mut eri_aa, &i4, p, q, r, s, value, line_no)?,
                        Block::EriBB => set_eri8(&mut eri_bb, &i4, p, q, r, s, value, line_no)?,
                        _ => {
                            for (a, b) in [(p, q), (q, p)] {
                                for (c, d) in [(r, s), (s, r)] {
                                    eri_ab.set(i4(a, b, c, d), value, line_no)?;
                                }
                            }
                        }
                    }
                }
                Some(Block::HA) | Some(Block::HB) => {
                    if i == 0 || j == 0 || k != 0 || l != 0 {
                        return Err(Error::parse(line_no, "expected a one-electron record"));
                    }
                    let slot = if UHF_BLOCKS[block] == Block::HA {
                        &mut h_a
                    } else {
                        &mut h_b
                    };
                    slot.set(i2(i - 1, j - 1), value, line_no)?;
                    slot.set(i2(j - 1, i - 1), value, line_no)?;
                }
                _ => return Err(Error::parse(line_no, "record after the core energy")),
            }
            continue;
        }

        if all_zero {
            set_core(&mut core, value, line_no)?;
        } else if k == 0 && l == 0 && i > 0 && j > 0 {
            h_a.set(i2(i - 1, j - 1), value, line_no)?;
            h_a.set(i2(j - 1, i - 1), value, line_no)?;
        } else if i > 0 && j > 0 && k > 0 && l > 0 {
            set_eri8(&mut eri_aa, &i4, i - 1, j - 1, k - 1, l - 1, value, line_no)?;
        } else if i > 0 && j == 0 && k == 0 && l == 0 {
            // orbital energy record; orbital energies are recomputed from the Fock diagonal
        } else {
            return Err(Error::parse(
                line_no,
                format!("unrecognized index pattern {i} {j} {k} {l}"),
            ));
        }
    }

    if header.iuhf && block < 5 {
        return Err(Error::parse(
            text.lines().count(),
            format!("unrestricted file ended in block {block}, expected 6 blocks"),
        ));
    }

    Ok(SpatialIntegrals {
        n_orbitals: n,
        n_electrons: header.nelec,
        ms2: header.ms2,
        core_energy: core.map(|c| c.0).unwrap_or(0.0),
        h_alpha: h_a.values,
        h_beta: header.iuhf.then_some(h_b.values),
        eri_aa: eri_aa.values,
        eri_bb: header.iuhf.then_some(eri_bb.values),
        eri_ab: header.iuhf.then_some(eri_ab.values),
    })
}

fn set_core(core: &mut Option<(f64, usize)>, value: f64, line: usize) -> Result<()> {
    if let Some((old, first)) = core {
        if (*old - value).abs() > DUPLICATE_TOLERANCE {
            return Err(Error::parse(
                line,
                format!("core energy {value} conflicts with {old} from line {first}"),
            ));
        }
    } else {
        *core = Some((value, line));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn set_eri8(
    slot: &mut Slot,
    i4: &impl Fn(usize, usize, usize, usize) -> usize,
    p: usize,
    q: usize,
    r: usize,
    s: usize,
    value: f64,
    line: usize,
) -> Result<()> {
    for (a, b, c, d) in [
        (p, q, r, s),
        (q, p, r, s),
        (p, q, s, r),
        (q, p, s, r),
        (r, s, p, q),
        (s, r, p, q),
        (r, s, q, p),
        (s, r, q, p),
    ] {
        slot.set(i4(a, b, c, d), value, line)?;
    }
    Ok(())
}

/// Read and parse an FCIDUMP file.
pub fn read_fcidump(path: impl AsRef<Path>) -> Result<SpatialIntegrals> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fcidump(&text)
}

/// Serialize to FCIDUMP text. Values use shortest round-trip formatting.
pub fn write_fcidump(si: &SpatialIntegrals) -> String {
    let n = si.n_orbitals;
    let mut out = String::new();
    let _ = writeln!(
        out,
        " &FCI NORB={},NELEC={},MS2={},",
        n, si.n_electrons, si.ms2
    );
    let _ = writeln!(out, "  ORBSYM={}", "1,".repeat(n));
    let _ = writeln!(out, "  ISYM=1,");
    if si.is_unrestricted() {
        let _ = writeln!(out, "  IUHF=1,");
    }
    let _ = writeln!(out, " &END");
    let record = |out: &mut String, v: f64, i: usize, j: usize, k: usize, l: usize| {
        let _ = writeln!(out, "{v:e} {i} {j} {k} {l}");
    };
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|p| (0..=p).map(move |q| (p, q))).collect();
    let write_eri = |out: &mut String, spins: (Spin, Spin), eightfold: bool| {
        for (pq, &(p, q)) in pairs.iter().enumerate() {
            let upper = if eightfold { pq + 1 } else { pairs.len() };
            for &(r, s) in &pairs[..upper] {
                let v = si.eri(spins.0, spins.1, p, q, r, s);
                if v != 0.0 {
                    record(out, v, p + 1, q + 1, r + 1, s + 1);
                }
            }
        }
    };
    let write_h = |out: &mut String, spin: Spin| {
        for &(p, q) in &pairs {
            let v = si.h(spin, p, q);
            if v != 0.0 {
                record(out, v, p + 1, q + 1, 0, 0);
            }
        }
    };
    if si.is_unrestricted() {
        write_eri(&mut out, (Spin::Alpha, Spin::Alpha), true);
        record(&mut out, 0.0, 0, 0, 0, 0);
        write_eri(&mut out, (Spin::Beta, Spin::Beta), true);
        record(&mut out, 0.0, 0, 0, 0, 0);
        write_eri(&mut out, (Spin::Alpha, Spin::Beta), false);
        record(&mut out, 0.0, 0, 0, 0, 0);
        write_h(&mut out, Spin::Alpha);
        record(&mut out, 0.0, 0, 0, 0, 0);
        write_h(&mut out, Spin::Beta);
        record(&mut out, 0.0, 0, 0, 0, 0);
    } else {
        write_eri(&mut out, (Spin::Alpha, Spin::Alpha), true);
        write_h(&mut out, Spin::Alpha);
    }
    record(&mut out, si.core_energy, 0, 0, 0, 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const H2: &str = " &FCI NORB=2,NELEC=2,MS2=0,
  ORBSYM=1,1,
  ISYM=1,
 &END
 0.6744 1 1 1 1
 0.6634 1 1 2 2
 0.1813 2 1 2 1
 0.6974 2 2 2 2
 -1.2524 1 1 0 0
 -0.4759 2 2 0 0
 0.7137 0 0 0 0
";

    #[test]
    fn parses_header_and_records() {
        let si = parse_fcidump(H2).unwrap();
        assert_eq!(si.n_orbitals, 2);
        assert_eq!(si.n_electrons, 2);
        assert_eq!(si.ms2, 0);
        assert!(!si.is_unrestricted());
        assert_eq!(si.core_energy, 0.7137);
        assert_eq!(si.h(Spin::Alpha, 1, 1), -0.4759);
        assert_eq!(si.h(Spin::Beta, 0, 0), -1.2524);
    }

    #[test]
    fn symmetry_completion() {
        let si = parse_fcidump(H2).unwrap();
        // (12|12) was read once as (21|21); every image must agree
        for (p, q, r, s) in [(0, 1, 0, 1), (1, 0, 0, 1), (0, 1, 1, 0), (1, 0, 1, 0)] {
            assert_eq!(si.eri(Spin::Alpha, Spin::Alpha, p, q, r, s), 0.1813);
        }
        assert_eq!(si.eri(Spin::Alpha, Spin::Beta, 1, 1, 0, 0), 0.6634);
    }

    #[test]
    fn core_only_file() {
        let si = parse_fcidump("&FCI NORB=1,NELEC=0,MS2=0,\n&END\n0.5  0 0 0 0\n").unwrap();
        assert_eq!(si.core_energy, 0.5);
        assert_eq!(si.h(Spin::Alpha, 0, 0), 0.0);
        assert_eq!(si.eri(Spin::Alpha, Spin::Alpha, 0, 0, 0, 0), 0.0);
    }

    #[test]
    fn single_line_header_and_fortran_exponent() {
        let si = parse_fcidump("&FCI NORB=1,NELEC=1,MS2=1,ORBSYM=1,ISYM=1 /\n-0.5D+00 1 1 0 0\n").unwrap();
        assert_eq!(si.ms2, 1);
        assert_eq!(si.h(Spin::Alpha, 0, 0), -0.5);
    }

    #[test]
    fn index_out_of_range_reports_line() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.1 1 1 1 1\n0.2 3 1 1 1\n";
        match parse_fcidump(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn conflicting_duplicate_is_an_error() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.1 1 2 1 1\n0.3 2 1 1 1\n";
        match parse_fcidump(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("duplicate"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        // consistent duplicates are fine
        let ok = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n0.1 1 2 1 1\n0.1 2 1 1 1\n";
        assert!(parse_fcidump(ok).is_ok());
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(
            parse_fcidump("NORB=2\n0.1 0 0 0 0\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_fcidump("&FCI NELEC=2,\n&END\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_fcidump("&FCI NORB=1,NELEC=3,\n&END\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn unrestricted_blocks() {
        let text = "&FCI NORB=1,NELEC=1,MS2=1,IUHF=1,\n&END\n\
            0.7 1 1 1 1\n0 0 0 0 0\n\
            0.6 1 1 1 1\n0 0 0 0 0\n\
            0.65 1 1 1 1\n0 0 0 0 0\n\
            -1.1 1 1 0 0\n0 0 0 0 0\n\
            -1.0 1 1 0 0\n0 0 0 0 0\n\
            0.25 0 0 0 0\n";
        let si = parse_fcidump(text).unwrap();
        assert!(si.is_unrestricted());
        assert_eq!(si.eri(Spin::Alpha, Spin::Alpha, 0, 0, 0, 0), 0.7);
        assert_eq!(si.eri(Spin::Beta, Spin::Beta, 0, 0, 0, 0), 0.6);
        assert_eq!(si.eri(Spin::Beta, Spin::Alpha, 0, 0, 0, 0), 0.65);
        assert_eq!(si.h(Spin::Alpha, 0, 0), -1.1);
        assert_eq!(si.h(Spin::Beta, 0, 0), -1.0);
        assert_eq!(si.core_energy, 0.25);

        let again = parse_fcidump(&write_fcidump(&si)).unwrap();
        assert_eq!(again, si);
    }

    #[test]
    fn round_trip_restricted() {
        let si = parse_fcidump(H2).unwrap();
        let again = parse_fcidump(&write_fcidump(&si)).unwrap();
        assert_eq!(again, si);
    }
}
