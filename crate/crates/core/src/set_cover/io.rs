use std::io::{BufRead, Write};

use super::{CoverError, CoverInstance};

/// Debug dump: `|U| num_sets`, then one line per set: set id followed by its
/// sorted dense element ids.
pub fn write_instance<W: Write>(inst: &CoverInstance, mut out: W) -> Result<(), CoverError> {
    writeln!(out, "{} {}", inst.universe_size(), inst.num_sets())?;
    for j in 0..inst.num_sets() {
        write!(out, "{j}")?;
        for e in inst.set(j) {
            write!(out, " {e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_instance<R: BufRead>(input: R) -> Result<CoverInstance, CoverError> {
    let mut lines = input.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let parse = |line: usize, tok: &str, what: &str| {
        tok.parse::<usize>().map_err(|_| CoverError::Parse {
            line,
            msg: format!("bad {what} `{tok}`"),
        })
    };
    let (ln, header) = lines.next().ok_or(CoverError::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let header = header?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 2 {
        return Err(CoverError::Parse {
            line: ln,
            msg: "header must be `|U| num_sets`".into(),
        });
    }
    let n = parse(ln, h[0], "universe size")?;
    let num_sets = parse(ln, h[1], "set count")?;
    if num_sets > super::MAX_SETS {
        return Err(CoverError::TooManySets(num_sets));
    }
    let mut sets: Vec<Option<Vec<u32>>> = vec![None; num_sets];
    for (ln, line) in lines {
        let line = line?;
        let mut toks = line.split_whitespace();
        let id = parse(ln, toks.next().unwrap_or_default(), "set id")?;
        if id >= num_sets || sets[id].is_some() {
            return Err(CoverError::Parse {
                line: ln,
                msg: format!("set id {id} out of range or repeated"),
            });
        }
        let elems = toks
            .map(|t| parse(ln, t, "element").map(|e| e as u32))
            .collect::<Result<Vec<_>, _>>()?;
        sets[id] = Some(elems);
    }
    CoverInstance::new(n, sets.into_iter().map(Option::unwrap_or_default).collect())
}
