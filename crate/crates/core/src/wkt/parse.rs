//! Recursive-descent WKT reader.

use super::{WktError, WktGeometry};
use crate::latlng::LatLng;

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

type Ring = Vec<LatLng>;

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> WktError {
        WktError::Syntax {
            offset: self.pos,
            message: msg.into(),
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), WktError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_ascii_alphabetic() {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.src[start..self.pos].to_ascii_uppercase()
    }

    fn number(&mut self) -> Result<f64, WktError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && matches!(bytes[self.pos], b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E') {
            self.pos += 1;
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map_err(|_| WktError::Syntax {
            offset: start,
            message: format!("expected a number, found {:?}", if text.is_empty() { self.rest_preview() } else { text.to_string() }),
        })
    }

    fn rest_preview(&self) -> String {
        self.src[self.pos..].chars().take(10).collect()
    }

    fn coord(&mut self) -> Result<LatLng, WktError> {
        self.skip_ws();
        let start = self.pos;
        let x = self.number()?;
        let y = self.number()?;
        if matches!(self.peek(), Some(c) if c == '-' || c == '+' || c.is_ascii_digit() || c == '.') {
            return Err(self.err("only 2-D coordinates are supported"));
        }
        LatLng::new(y, x).map_err(|_| WktError::OutOfRange {
            offset: start,
            lng: x,
            lat: y,
        })
    }

    /// `( x y, x y, ... )`
    fn coord_list(&mut self) -> Result<Vec<LatLng>, WktError> {
        self.expect('(')?;
        let mut out = vec![self.coord()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            out.push(self.coord()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn list_of<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T, WktError>) -> Result<Vec<T>, WktError> {
        self.expect('(')?;
        let mut out = vec![item(self)?];
        while self.peek() == Some(',') {
            self.pos += 1;
            out.push(item(self)?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn ring(&mut self) -> Result<Ring, WktError> {
        self.skip_ws();
        let start = self.pos;
        let r = self.coord_list()?;
        if r.len() < 4 {
            return Err(WktError::Ring {
                offset: start,
                message: "ring needs at least 4 positions".into(),
            });
        }
        if r.first() != r.last() {
            return Err(WktError::Ring {
                offset: start,
                message: "unclosed ring".into(),
            });
        }
        Ok(r)
    }

    fn polygon_body(&mut self) -> Result<Vec<Ring>, WktError> {
        self.list_of(Self::ring)
    }

    fn multipoint_item(&mut self) -> Result<LatLng, WktError> {
        if self.peek() == Some('(') {
            self.pos += 1;
            let c = self.coord()?;
            self.expect(')')?;
            Ok(c)
        } else {
            self.coord()
        }
    }

    fn geometry(&mut self) -> Result<WktGeometry, WktError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let kind = self.word();
        let tag = {
            let save = self.pos;
            let w = self.word();
            if w.is_empty() {
                self.pos = save;
            }
            w
        };
        if tag == "EMPTY" {
            return Err(WktError::Syntax {
                offset: start,
                message: "empty geometries are not supported".into(),
            });
        }
        if !tag.is_empty() {
            return Err(WktError::Syntax {
                offset: start,
                message: format!("dimension tag {tag:?} is not supported"),
            });
        }
        match kind.as_str() {
            "POINT" => {
                self.expect('(')?;
                let c = self.coord()?;
                self.expect(')')?;
                Ok(WktGeometry::Point(c))
            }
            "LINESTRING" => {
                let l = self.coord_list()?;
                if l.len() < 2 {
                    return Err(self.err("linestring needs at least 2 positions"));
                }
                Ok(WktGeometry::LineString(l))
            }
            "POLYGON" => Ok(WktGeometry::Polygon(self.polygon_body()?)),
            "MULTIPOINT" => Ok(WktGeometry::MultiPoint(self.list_of(Self::multipoint_item)?)),
            "MULTILINESTRING" => Ok(WktGeometry::MultiLineString(self.list_of(Self::coord_list)?)),
            "MULTIPOLYGON" => Ok(WktGeometry::MultiPolygon(self.list_of(Self::polygon_body)?)),
            "" => Err(WktError::Syntax {
                offset: start,
                message: "expected a geometry keyword".into(),
            }),
            other => Err(WktError::UnsupportedKind {
                offset: start,
                kind: other.to_string(),
            }),
        }
    }
}

pub fn parse_wkt(text: &str) -> Result<WktGeometry, WktError> {
    if text.trim().is_empty() {
        return Err(WktError::Syntax {
            offset: 0,
            message: "empty input".into(),
        });
    }
    let mut p = Parser { src: text, pos: 0 };
    let g = p.geometry()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.err("trailing characters after geometry"));
    }
    Ok(g)
}
