//! Just enough HTTP/1.1 for one request per connection with a
//! `Content-Length` body. Chunked transfer coding is not supported.

use std::io::{self, BufRead, Read, Write};

const MAX_HEAD: usize = 64 * 1024;
const MAX_BODY: usize = 1 << 30;

#[derive(Debug)]
pub(crate) enum HttpError {
    Io(io::Error),
    Malformed(String),
    LengthRequired,
}

impl From<io::Error> for HttpError {
    fn from(e: io::Error) -> Self {
        HttpError::Io(e)
    }
}

impl std::fmt::Display for HttpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HttpError::Io(e) => write!(f, "{e}"),
            HttpError::Malformed(m) => write!(f, "malformed HTTP message: {m}"),
            HttpError::LengthRequired => f.write_str("Content-Length required"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Headers(Vec<(String, String)>);

impl Headers {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.0.push((name.into(), value.into()));
    }

    fn content_length(&self) -> Result<Option<usize>, HttpError> {
        if self.get("transfer-encoding").is_some_and(|v| !v.eq_ignore_ascii_case("identity")) {
            return Err(HttpError::LengthRequired);
        }
        match self.get("content-length") {
            None => Ok(None),
            Some(v) => {
                let n: usize =
                    v.trim().parse().map_err(|_| HttpError::Malformed(format!("bad Content-Length {v:?}")))?;
                if n > MAX_BODY {
                    return Err(HttpError::Malformed(format!("body of {n} bytes too large")));
                }
                Ok(Some(n))
            }
        }
    }
}

#[derive(Debug)]
pub(crate) struct Request {
    pub method: String,
    pub path: String,
    pub headers: Headers,
    pub body: Vec<u8>,
}

#[derive(Debug)]
pub(crate) struct Response {
    pub status: u16,
    pub headers: Headers,
    pub body: Vec<u8>,
}

pub(crate) fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        405 => "Method Not Allowed",
        411 => "Length Required",
        415 => "Unsupported Media Type",
        422 => "Unprocessable Entity",
        _ => "Internal Server Error",
    }
}

/// Reads lines up to the blank separator. `Ok(None)` on EOF before any byte.
fn read_head(r: &mut impl BufRead) -> Result<Option<Vec<String>>, HttpError> {
    let mut lines = Vec::new();
    let mut total = 0;
    loop {
        let mut buf = Vec::new();
        let n = r.read_until(b'\n', &mut buf)?;
        if n == 0 {
            if lines.is_empty() && total == 0 {
                return Ok(None);
            }
            return Err(HttpError::Io(io::ErrorKind::UnexpectedEof.into()));
        }
        total += n;
        if total > MAX_HEAD {
            return Err(HttpError::Malformed("header section too large".into()));
        }
        let line = String::from_utf8(buf).map_err(|_| HttpError::Malformed("non-UTF-8 header".into()))?;
        let line = line.trim_end_matches(['\r', '\n']).to_string();
        if line.is_empty() {
            if lines.is_empty() {
                // Tolerate stray CRLF before the start line.
                continue;
            }
            return Ok(Some(lines));
        }
        lines.push(line);
    }
}

fn parse_headers(lines: &[String]) -> Result<Headers, HttpError> {
    let mut headers = Headers::default();
    for line in lines {
        let (k, v) = line.split_once(':').ok_or_else(|| HttpError::Malformed(format!("bad header line {line:?}")))?;
        headers.push(k.trim(), v.trim());
    }
    Ok(headers)
}

fn read_body(r: &mut impl Read, len: usize) -> io::Result<Vec<u8>> {
    let mut body = vec![0; len];
    r.read_exact(&mut body)?;
    Ok(body)
}

pub(crate) fn read_request(r: &mut impl BufRead) -> Result<Option<Request>, HttpError> {
    let Some(lines) = read_head(r)? else {
        return Ok(None);
    };
    let mut parts = lines[0].split_whitespace();
    let (Some(method), Some(path), Some(version), None) = (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(HttpError::Malformed(format!("bad request line {:?}", lines[0])));
    };
    if !version.starts_with("HTTP/1.") {
        return Err(HttpError::Malformed(format!("unsupported version {version}")));
    }
    let headers = parse_headers(&lines[1..])?;
    let body = match headers.content_length()? {
        Some(n) => read_body(r, n)?,
        None if method == "POST" || method == "PUT" => return Err(HttpError::LengthRequired),
        None => Vec::new(),
    };
    Ok(Some(Request { method: method.to_string(), path: path.to_string(), headers, body }))
}

pub(crate) fn write_request(
    w: &mut impl Write,
    path: &str,
    host: &str,
    content_type: &str,
    body: &[u8],
) -> io::Result<()> {
    let head = format!(
        "POST {path} HTTP/1.1\r\nHost: {host}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    w.write_all(head.as_bytes())?;
    w.write_all(body)?;
    w.flush()
}

pub(crate) fn write_response(w: &mut impl Write, resp: &Response) -> io::Result<()> {
    let mut head = format!("HTTP/1.1 {} {}\r\n", resp.status, reason(resp.status));
    for (k, v) in &resp.headers.0 {
        head.push_str(&format!("{k}: {v}\r\n"));
    }
    head.push_str(&format!("Content-Length: {}\r\nConnection: close\r\n\r\n", resp.body.len()));
    w.write_all(head.as_bytes())?;
    w.write_all(&resp.body)?;
    w.flush()
}

pub(crate) fn read_response(r: &mut impl BufRead) -> Result<Response, HttpError> {
    let lines = read_head(r)?.ok_or_else(|| HttpError::Io(io::ErrorKind::UnexpectedEof.into()))?;
    let mut parts = lines[0].splitn(3, ' ');
    let version = parts.next().unwrap_or("");
    if !version.starts_with("HTTP/1.") {
        return Err(HttpError::Malformed(format!("bad status line {:?}", lines[0])));
    }
    let status: u16 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| HttpError::Malformed(format!("bad status line {:?}", lines[0])))?;
    let headers = parse_headers(&lines[1..])?;
    let body = match headers.content_length()? {
        Some(n) => read_body(r, n)?,
        None => {
            let mut rest = Vec::new();
            r.read_to_end(&mut rest)?;
            rest
        }
    };
    Ok(Response { status, headers, body })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn request_roundtrip() {
        let mut buf = Vec::new();
        write_request(&mut buf, "/invoke/mul", "h", "application/json", b"[[1.0]]").unwrap();
        let req = read_request(&mut Cursor::new(buf)).unwrap().unwrap();
        assert_eq!(req.method, "POST");
        assert_eq!(req.path, "/invoke/mul");
        assert_eq!(req.headers.get("content-type"), Some("application/json"));
        assert_eq!(req.body, b"[[1.0]]");
    }

    #[test]
    fn response_roundtrip() {
        let mut headers = Headers::default();
        headers.push("X-Srv-Exec-Us", "12");
        let resp = Response { status: 422, headers, body: b"nope".to_vec() };
        let mut buf = Vec::new();
        write_response(&mut buf, &resp).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("HTTP/1.1 422 Unprocessable Entity\r\n"));
        let back = read_response(&mut Cursor::new(buf)).unwrap();
        assert_eq!(back.status, 422);
        assert_eq!(back.headers.get("x-srv-exec-us"), Some("12"));
        assert_eq!(back.body, b"nope");
    }

    #[test]
    fn post_without_length_is_rejected() {
        let raw = b"POST /x HTTP/1.1\r\nHost: a\r\n\r\n";
        assert!(matches!(read_request(&mut Cursor::new(&raw[..])), Err(HttpError::LengthRequired)));
        let chunked = b"POST /x HTTP/1.1\r\nTransfer-Encoding: chunked\r\n\r\n";
        assert!(matches!(read_request(&mut Cursor::new(&chunked[..])), Err(HttpError::LengthRequired)));
    }

    #[test]
    fn eof_and_garbage() {
        assert!(read_request(&mut Cursor::new(&b""[..])).unwrap().is_none());
        assert!(matches!(read_request(&mut Cursor::new(&b"hello\r\n\r\n"[..])), Err(HttpError::Malformed(_))));
        assert!(matches!(
            read_request(&mut Cursor::new(&b"POST /x HTTP/1.1\r\nContent-Length: 10\r\n\r\nabc"[..])),
            Err(HttpError::Io(_))
        ));
    }
}
