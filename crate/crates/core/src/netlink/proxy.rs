use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::{LinkParams, TokenBucket, CHUNK_BYTES};
use crate::error::{Error, Result};

/// Chunks admitted by the bucket but still inside the latency window.
const DELAY_LINE_DEPTH: usize = 4096;

/// A running shaping proxy. Dropping the handle stops accepting new
/// connections; connections already open run to completion.
#[derive(Debug)]
pub struct ProxyHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ProxyHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    /// Blocks until the accept loop exits.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn shutdown(&mut self) {
        if let Some(t) = self.thread.take() {
            self.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
            let _ = t.join();
        }
    }
}

impl Drop for ProxyHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Forwards byte streams between `listen` and `upstream`, pacing each
/// direction with its own token bucket and delaying every chunk by the
/// link latency.
pub fn shaping_proxy(
    listen: impl ToSocketAddrs,
    upstream: impl ToSocketAddrs,
    link: LinkParams,
) -> Result<ProxyHandle> {
    let upstream =
        upstream.to_socket_addrs()?.next().ok_or_else(|| Error::invalid("upstream resolved to no address"))?;
    let listener = TcpListener::bind(listen)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    let thread = thread::Builder::new().name(format!("shaping-proxy-{addr}")).spawn(move || {
        for conn in listener.incoming() {
            if flag.load(Ordering::SeqCst) {
                break;
            }
            let Ok(client) = conn else { continue };
            match TcpStream::connect(upstream) {
                Ok(server) => {
                    if let Err(e) = start_pumps(client, server, link) {
                        eprintln!("proxy: cannot start connection: {e}");
                    }
                }
                Err(e) => {
                    eprintln!("proxy: upstream {upstream} unreachable: {e}");
                    let _ = client.shutdown(Shutdown::Both);
                }
            }
        }
    })?;
    Ok(ProxyHandle { addr, stop, thread: Some(thread) })
}

fn start_pumps(client: TcpStream, server: TcpStream, link: LinkParams) -> std::io::Result<()> {
    client.set_nodelay(true)?;
    server.set_nodelay(true)?;
    pump(client.try_clone()?, server.try_clone()?, link)?;
    pump(server, client, link)?;
    Ok(())
}

/// One direction: a reader that admits chunks through the bucket and a
/// writer that releases each chunk once its latency has elapsed.
fn pump(src: TcpStream, dst: TcpStream, link: LinkParams) -> std::io::Result<()> {
    let (tx, rx) = mpsc::sync_channel::<(Instant, Vec<u8>)>(DELAY_LINE_DEPTH);
    let latency = Duration::from_secs_f64(link.latency_s);

    let reader_src = src.try_clone()?;
    let reader_dst = dst.try_clone()?;
    thread::Builder::new().name("proxy-reader".into()).spawn(move || {
        let mut src = reader_src;
        let mut bucket = TokenBucket::new(link.rate_bps / 8.0, link.bucket_bytes, Instant::now());
        let mut buf = vec![0u8; CHUNK_BYTES];
        loop {
            match src.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    let wait = bucket.reserve(n, Instant::now());
                    if !wait.is_zero() {
                        thread::sleep(wait);
                    }
                    if tx.send((Instant::now() + latency, buf[..n].to_vec())).is_err() {
                        break;
                    }
                }
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(_) => {
                    let _ = src.shutdown(Shutdown::Both);
                    let _ = reader_dst.shutdown(Shutdown::Both);
                    break;
                }
            }
        }
    })?;

    thread::Builder::new().name("proxy-writer".into()).spawn(move || {
        let mut dst = dst;
        for (due, chunk) in rx {
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
            if dst.write_all(&chunk).is_err() {
                let _ = dst.shutdown(Shutdown::Both);
                let _ = src.shutdown(Shutdown::Both);
                return;
            }
        }
        let _ = dst.shutdown(Shutdown::Write);
    })?;
    Ok(())
}
