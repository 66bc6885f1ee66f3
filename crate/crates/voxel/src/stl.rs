//! STL reader/writer. Binary layout: 80-byte header, u32 little-endian
//! triangle count, then 50-byte records (normal, three vertices as f32
//! triples, u16 attribute count). ASCII layout: the usual
//! `solid ... facet normal ... endsolid` grammar. A file is treated as
//! ASCII iff it parses completely under the ASCII grammar.

use crate::error::{stl_byte_err, stl_line_err, Result, VoxelError};
use crate::mesh::{Triangle, TriangleMesh};

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;

/// Parse either STL variant, auto-detected.
pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh> {
    if let Ok(mesh) = parse_ascii(bytes) {
        return Ok(mesh);
    }
    parse_binary(bytes)
}

fn read_f32(bytes: &[u8], offset: usize) -> f32 {
    f32::from_le_bytes([bytes[offset], bytes[offset + 1], bytes[offset + 2], bytes[offset + 3]])
}

fn parse_binary(bytes: &[u8]) -> Result<TriangleMesh> {
    if bytes.len() < HEADER_LEN + 4 {
        return stl_byte_err(bytes.len(), "binary stl shorter than header + count");
    }
    let count = u32::from_le_bytes([
        bytes[HEADER_LEN],
        bytes[HEADER_LEN + 1],
        bytes[HEADER_LEN + 2],
        bytes[HEADER_LEN + 3],
    ]) as usize;
    let body = &bytes[HEADER_LEN + 4..];
    let available = body.len() / RECORD_LEN;
    if body.len() != count * RECORD_LEN {
        return stl_byte_err(
            HEADER_LEN + 4 + body.len().min(count * RECORD_LEN),
            format!("declared {count} triangles but payload holds {available} complete records"),
        );
    }
    let mut triangles = Vec::with_capacity(count);
    for i in 0..count {
        let rec = HEADER_LEN + 4 + i * RECORD_LEN;
        let mut values = [0.0f32; 12];
        for (j, v) in values.iter_mut().enumerate() {
            *v = read_f32(bytes, rec + 4 * j);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return stl_byte_err(rec, format!("non-finite coordinate in record {i}"));
        }
        triangles.push(Triangle {
            normal: Some([values[0] as f64, values[1] as f64, values[2] as f64]),
            vertices: [
                [values[3] as f64, values[4] as f64, values[5] as f64],
                [values[6] as f64, values[7] as f64, values[8] as f64],
                [values[9] as f64, values[10] as f64, values[11] as f64],
            ],
        });
    }
    Ok(TriangleMesh::new(triangles))
}

struct AsciiTokens<'a> {
    tokens: Vec<(usize, &'a str)>, // (line number, token)
    pos: usize,
}

impl<'a> AsciiTokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.tokens.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.tokens.get(self.pos).copied()
    }

    fn expect(&mut self, keyword: &str) -> Result<usize> {
        match self.next() {
            Some((line, tok)) if tok.eq_ignore_ascii_case(keyword) => Ok(line),
            Some((line, tok)) => stl_line_err(line, format!("expected '{keyword}', found '{tok}'")),
            None => stl_line_err(self.tokens.last().map_or(1, |t| t.0), format!("expected '{keyword}', found end of file")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.next() {
            Some((line, tok)) => tok
                .parse::<f64>()
                .map_err(|_| VoxelError::Stl { offset: None, line: Some(line), detail: format!("malformed number '{tok}'") }),
            None => stl_line_err(self.tokens.last().map_or(1, |t| t.0), "expected number, found end of file"),
        }
    }
}

fn parse_ascii(bytes: &[u8]) -> Result<TriangleMesh> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| VoxelError::Stl { offset: Some(e.valid_up_to()), line: None, detail: "not valid utf-8".into() })?;
    let mut tokens = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            tokens.push((ln + 1, tok));
        }
    }
    let mut ts = AsciiTokens { tokens, pos: 0 };

    ts.expect("solid")?;
    // Optional solid name: consume tokens until 'facet' or 'endsolid'.
    while let Some((_, tok)) = ts.peek() {
        if tok.eq_ignore_ascii_case("facet") || tok.eq_ignore_ascii_case("endsolid") {
            break;
        }
        ts.next();
    }

    let mut triangles = Vec::new();
    loop {
        match ts.peek() {
            Some((_, tok)) if tok.eq_ignore_ascii_case("facet") => {
                ts.next();
                ts.expect("normal")?;
                let normal = [ts.number()?, ts.number()?, ts.number()?];
                ts.expect("outer")?;
                ts.expect("loop")?;
                let mut vertices = [[0.0; 3]; 3];
                for v in &mut vertices {
                    ts.expect("vertex")?;
                    *v = [ts.number()?, ts.number()?, ts.number()?];
                }
                ts.expect("endloop")?;
                ts.expect("endfacet")?;
                triangles.push(Triangle { vertices, normal: Some(normal) });
            }
            Some((_, tok)) if tok.eq_ignore_ascii_case("endsolid") => {
                ts.next();
                // Optional trailing name.
                while ts.next().is_some() {}
                return Ok(TriangleMesh::new(triangles));
            }
            Some((line, tok)) => {
                return stl_line_err(line, format!("expected 'facet' or 'endsolid', found '{tok}'"))
            }
            None => {
                return stl_line_err(
                    ts.tokens.last().map_or(1, |t| t.0),
                    "missing 'endsolid'",
                )
            }
        }
    }
}

/// Serialize as binary STL (the canonical output format here).
pub fn write_stl(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + mesh.len() * RECORD_LEN);
    let mut header = [0u8; HEADER_LEN];
    let tag = b"binary stl";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.len() as u32).to_le_bytes());
    for t in &mesh.triangles {
        let n = t.normal.unwrap_or([0.0, 0.0, 0.0]);
        for c in n {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
        for v in &t.vertices {
            for c in v {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}
