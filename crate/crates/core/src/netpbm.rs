//! Plain and binary Netpbm I/O: masks as P1 bitmaps (1 = masked), images as
//! P2/P5 graymaps. Header comments are preserved on read.

use crate::error::{MaskError, Result};
use crate::grid::{GrayImage, MaskMap, PatchGrid};

/// Decoded header plus the byte offset where the raster starts.
struct Header {
    magic: [u8; 2],
    fields: Vec<usize>,
    comments: Vec<String>,
    offset: usize,
}

fn parse_err(msg: impl Into<String>) -> MaskError {
    MaskError::Parse(msg.into())
}

fn read_header(data: &[u8], nfields: usize) -> Result<Header> {
    if data.len() < 2 || data[0] != b'P' {
        return Err(parse_err("missing Netpbm magic number"));
    }
    let magic = [data[0], data[1]];
    let mut pos = 2;
    let mut fields = Vec::with_capacity(nfields);
    let mut comments = Vec::new();
    while fields.len() < nfields {
        match data.get(pos) {
            None => return Err(parse_err("truncated header")),
            Some(b'#') => {
                let end = data[pos..]
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(data.len(), |e| pos + e);
                let line = String::from_utf8_lossy(&data[pos + 1..end]);
                comments.push(
                    line.strip_prefix(' ')
                        .unwrap_or(&line)
                        .trim_end_matches('\r')
                        .to_string(),
                );
                pos = end;
            }
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            Some(b) if b.is_ascii_digit() => {
                let start = pos;
                while data.get(pos).is_some_and(u8::is_ascii_digit) {
                    pos += 1;
                }
                let text = std::str::from_utf8(&data[start..pos]).expect("ascii digits");
                fields.push(
                    text.parse()
                        .map_err(|_| parse_err(format!("header value {text} too large")))?,
                );
            }
            Some(&b) => return Err(parse_err(format!("unexpected byte {:?} in header", b as char))),
        }
    }
    Ok(Header {
        magic,
        fields,
        comments,
        offset: pos,
    })
}

fn plain_values(data: &[u8]) -> impl Iterator<Item = Result<u32>> + '_ {
    let text = String::from_utf8_lossy(data).into_owned();
    let tokens: Vec<String> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_ascii_whitespace().map(str::to_string).collect::<Vec<_>>())
        .collect();
    tokens.into_iter().map(|t| {
        t.parse::<u32>()
            .map_err(|_| parse_err(format!("bad raster value {t:?}")))
    })
}

fn header_text(magic: &str, comments: &[String], dims: &str) -> String {
    let mut out = format!("{magic}\n");
    for c in comments {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str(dims);
    out.push('\n');
    out
}

/// Mask as a plain P1 bitmap, one text row per patch row.
pub fn write_mask_pbm(mask: &MaskMap, comments: &[String]) -> String {
    let g = mask.grid();
    let mut out = header_text("P1", comments, &format!("{} {}", g.cols(), g.rows()));
    for row in 0..g.rows() {
        let line: Vec<&str> = (0..g.cols())
            .map(|col| if mask.is_masked(col, row) { "1" } else { "0" })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parse a P1 bitmap (plain; bits may be packed without separators).
pub fn read_mask_pbm(data: &[u8]) -> Result<(MaskMap, Vec<String>)> {
    let h = read_header(data, 2)?;
    if &h.magic != b"P1" {
        return Err(parse_err("mask must be a plain P1 bitmap"));
    }
    let (cols, rows) = (h.fields[0], h.fields[1]);
    let grid = PatchGrid::cells(cols, rows)?;
    let mut cells = Vec::with_capacity(cols * rows);
    let mut in_comment = false;
    for &b in &data[h.offset..] {
        match b {
            b'#' => in_comment = true,
            b'\n' => in_comment = false,
            _ if in_comment => {}
            b'0' => cells.push(false),
            b'1' => cells.push(true),
            b if b.is_ascii_whitespace() => {}
            b => return Err(parse_err(format!("bad bitmap value {:?}", b as char))),
        }
    }
    if cells.len() != cols * rows {
        return Err(parse_err(format!(
            "expected {} bits, found {}",
            cols * rows,
            cells.len()
        )));
    }
    Ok((MaskMap::new(grid, cells)?, h.comments))
}

/// Plain P2 graymap.
pub fn write_pgm_plain(img: &GrayImage, comments: &[String]) -> String {
    let dims = format!("{} {}\n{}", img.width(), img.height(), img.max_value());
    let mut out = header_text("P2", comments, &dims);
    for row in img.pixels().chunks(img.width().max(1)) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Binary P5 graymap; two big-endian bytes per sample when maxval > 255.
pub fn write_pgm_binary(img: &GrayImage, comments: &[String]) -> Vec<u8> {
    let dims = format!("{} {}\n{}", img.width(), img.height(), img.max_value());
    let mut out = header_text("P5", comments, &dims).into_bytes();
    for &p in img.pixels() {
        if img.max_value() > 255 {
            out.extend_from_slice(&p.to_be_bytes());
        } else {
            out.push(p as u8);
        }
    }
    out
}

/// Read a P2 or P5 graymap.
pub fn read_pgm(data: &[u8]) -> Result<(GrayImage, Vec<String>)> {
    let h = read_header(data, 3)?;
    let (w, ht, max) = (h.fields[0], h.fields[1], h.fields[2]);
    if max == 0 || max > usize::from(u16::MAX) {
        return Err(parse_err(format!("maxval {max} outside 1..=65535")));
    }
    let max = max as u16;
    let n = w * ht;
    let pixels: Vec<u16> = match &h.magic {
        b"P2" => {
            let vals = plain_values(&data[h.offset..]).collect::<Result<Vec<_>>>()?;
            if vals.len() != n {
                return Err(parse_err(format!("expected {n} samples, found {}", vals.len())));
            }
            vals.into_iter()
                .map(|v| u16::try_from(v).map_err(|_| parse_err(format!("sample {v} exceeds maxval"))))
                .collect::<Result<_>>()?
        }
        b"P5" => {
            // exactly one whitespace byte separates maxval from the raster
            let raster = data.get(h.offset + 1..).unwrap_or(&[]);
            let bytes = if max > 255 { 2 } else { 1 };
            if raster.len() < n * bytes {
                return Err(parse_err(format!(
                    "expected {} raster bytes, found {}",
                    n * bytes,
                    raster.len()
                )));
            }
            if bytes == 2 {
                raster[..2 * n]
                    .chunks(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]))
                    .collect()
            } else {
                raster[..n].iter().map(|&b| u16::from(b)).collect()
            }
        }
        m => return Err(parse_err(format!("unsupported format {}", String::from_utf8_lossy(m)))),
    };
    Ok((GrayImage::new(w, ht, max, pixels)?, h.comments))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_round_trip() {
        let grid = PatchGrid::cells(4, 3).unwrap();
        let mask = MaskMap::from_masked_indices(grid, &[0, 5, 11]).unwrap();
        let comments = vec![
            "pattern=mesh ratio=0.6 seed=1 grid=4x3".to_string(),
            "tool=maskkit".to_string(),
        ];
        let text = write_mask_pbm(&mask, &comments);
        assert!(text.starts_with("P1\n# pattern=mesh ratio=0.6 seed=1 grid=4x3\n# tool=maskkit\n4 3\n1 0 0 0\n"));
        let (back, c) = read_mask_pbm(text.as_bytes()).unwrap();
        assert_eq!((back, c), (mask, comments));
    }

    #[test]
    fn mask_packed_and_errors() {
        let (m, _) = read_mask_pbm(b"P1 3 2 101\n010").unwrap();
        assert_eq!(m.masked_indices(), vec![0, 2, 4]);
        assert!(read_mask_pbm(b"P1 3 2 101").is_err());
        assert!(read_mask_pbm(b"P2 3 2 101010").is_err());
        assert!(read_mask_pbm(b"P1 2 1 12").is_err());
        assert!(read_mask_pbm(b"").is_err());
    }

    #[test]
    fn gray_round_trips() {
        let img = GrayImage::from_fn(5, 3, 255, |x, y| (x * 50 + y) as u16).unwrap();
        let comments = vec!["note".to_string()];
        let (p2, c2) = read_pgm(write_pgm_plain(&img, &comments).as_bytes()).unwrap();
        assert_eq!((p2, c2), (img.clone(), comments.clone()));
        let (p5, c5) = read_pgm(&write_pgm_binary(&img, &comments)).unwrap();
        assert_eq!((p5, c5), (img, comments));
        let deep = GrayImage::from_fn(3, 2, 1000, |x, y| (x * 300 + y) as u16).unwrap();
        assert_eq!(read_pgm(&write_pgm_binary(&deep, &[])).unwrap().0, deep);
    }

    #[test]
    fn gray_errors() {
        assert!(read_pgm(b"P2 2 1 255\n1").is_err());
        assert!(read_pgm(b"P2 2 1 255\n1 300").is_err());
        assert!(read_pgm(b"P5 2 2 255\n\x01").is_err());
        assert!(read_pgm(b"P6 1 1 255\n\x00\x00\x00").is_err());
        assert!(read_pgm(b"P2 1 1 0\n0").is_err());
    }
}
