use std::collections::HashMap;
use std::fmt;
use std::io::{BufReader, Read};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::http::{self, Headers, HttpError, Request, Response};
use super::{HEADER_SRV_DECODE, HEADER_SRV_ENCODE, HEADER_SRV_EXEC, SINK_PATH};
use crate::codecs::{self, CodecKind};
use crate::error::{Error, Result};
use crate::workloads::{Matrix, OpKind};

const IO_TIMEOUT: Duration = Duration::from_secs(120);
const DRAIN_TIMEOUT: Duration = Duration::from_secs(2);

pub type Handler = Box<dyn Fn(&Matrix) -> Result<Matrix> + Send + Sync>;

/// Maps each operation to the function that executes it.
pub struct Registry {
    handlers: HashMap<OpKind, Handler>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry { handlers: HashMap::new() }
    }

    /// MUL, INV and LN bound to the local kernels.
    pub fn standard() -> Self {
        let mut r = Registry::empty();
        for op in OpKind::ALL {
            r.register(op, Box::new(move |m| op.apply(m)));
        }
        r
    }

    pub fn register(&mut self, op: OpKind, handler: Handler) {
        self.handlers.insert(op, handler);
    }

    fn get(&self, op: OpKind) -> Option<&Handler> {
        self.handlers.get(&op)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::standard()
    }
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut ops: Vec<_> = self.handlers.keys().collect();
        ops.sort();
        f.debug_struct("Registry").field("ops", &ops).finish()
    }
}

/// A running server. Dropping the handle stops it.
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    /// Blocks until the server thread exits.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn shutdown(&mut self) {
        if let Some(t) = self.thread.take() {
            self.stop.store(true, Ordering::SeqCst);
            // Unblock accept().
            let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Binds `endpoint` and serves requests one at a time on a background thread.
pub fn serve(endpoint: impl ToSocketAddrs, registry: Registry) -> Result<ServerHandle> {
    let listener = TcpListener::bind(endpoint)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    let thread = thread::Builder::new().name(format!("offload-server-{addr}")).spawn(move || {
        for conn in listener.incoming() {
            if flag.load(Ordering::SeqCst) {
                break;
            }
            match conn {
                Ok(stream) => handle_connection(stream, &registry),
                Err(_) => continue,
            }
        }
    })?;
    Ok(ServerHandle { addr, stop, thread: Some(thread) })
}

fn handle_connection(stream: TcpStream, registry: &Registry) {
    let _ = stream.set_nodelay(true);
    let _ = stream.set_read_timeout(Some(IO_TIMEOUT));
    let _ = stream.set_write_timeout(Some(IO_TIMEOUT));
    let Ok(mut writer) = stream.try_clone() else {
        return;
    };
    let mut reader = BufReader::with_capacity(64 * 1024, stream);
    let response = match http::read_request(&mut reader) {
        Ok(Some(req)) => dispatch(req, registry),
        Ok(None) => return,
        Err(HttpError::LengthRequired) => text_response(411, "Content-Length required"),
        Err(HttpError::Malformed(m)) => text_response(400, &m),
        Err(HttpError::Io(_)) => return,
    };
    let _ = http::write_response(&mut writer, &response);
    let _ = writer.shutdown(std::net::Shutdown::Write);
    // Drain until the client closes so the response is not reset by unread input.
    let _ = reader.get_ref().set_read_timeout(Some(DRAIN_TIMEOUT));
    let _ = reader.read_to_end(&mut Vec::new());
}

fn text_response(status: u16, message: &str) -> Response {
    let mut headers = Headers::default();
    headers.push("Content-Type", "text/plain; charset=utf-8");
    Response { status, headers, body: message.as_bytes().to_vec() }
}

fn micros(d: Duration) -> String {
    d.as_micros().to_string()
}

fn dispatch(req: Request, registry: &Registry) -> Response {
    if req.path == SINK_PATH {
        if req.method != "POST" {
            return text_response(405, "use POST");
        }
        return text_response(200, &req.body.len().to_string());
    }

    let Some(segment) = req.path.strip_prefix("/invoke/") else {
        return text_response(404, &format!("no route for {}", req.path));
    };
    let Some(op) = OpKind::ALL.into_iter().find(|op| op.path_segment() == segment) else {
        return text_response(404, &format!("unknown function {segment:?}"));
    };
    let Some(handler) = registry.get(op) else {
        return text_response(404, &format!("no handler registered for {op}"));
    };
    if req.method != "POST" {
        return text_response(405, "use POST");
    }
    let Some(codec) = req.headers.get("content-type").and_then(CodecKind::from_content_type) else {
        return text_response(
            415,
            &format!("unsupported content type {:?}", req.headers.get("content-type").unwrap_or("")),
        );
    };

    let t0 = Instant::now();
    let input = match codecs::decode(codec, &req.body) {
        Ok(m) => m,
        Err(e) => return text_response(400, &e.to_string()),
    };
    let t_decode = t0.elapsed();

    let t1 = Instant::now();
    let output = match handler(&input) {
        Ok(m) => m,
        Err(e) => return text_response(422, &e.to_string()),
    };
    let t_exec = t1.elapsed();

    let t2 = Instant::now();
    let payload = match codecs::encode(codec, &output) {
        Ok(p) => p,
        Err(e @ Error::InvalidArgument(_)) => return text_response(422, &e.to_string()),
        Err(e) => return text_response(500, &e.to_string()),
    };
    let t_encode = t2.elapsed();

    let mut headers = Headers::default();
    headers.push("Content-Type", codec.content_type());
    headers.push(HEADER_SRV_DECODE, micros(t_decode));
    headers.push(HEADER_SRV_EXEC, micros(t_exec));
    headers.push(HEADER_SRV_ENCODE, micros(t_encode));
    Response { status: 200, headers, body: payload.bytes }
}
