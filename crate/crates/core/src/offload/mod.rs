//! Function-call offloading over HTTP/1.1.
//!
//! A request is `POST /invoke/{mul|inv|ln}` whose body is one encoded matrix;
//! `Content-Type` names the codec and the response reuses it. The server
//! reports its own stage durations in whole microseconds through the
//! `X-Srv-Decode-Us`, `X-Srv-Exec-Us` and `X-Srv-Encode-Us` headers so the
//! client can infer pure communication time from a single exchange.
//!
//! `POST /sink` drains its body and answers with the byte count; the link
//! self-test uses it as a bulk-transfer target.

mod client;
pub(crate) mod http;
mod server;

pub use client::{invoke_remote, Invocation};
pub use server::{serve, Handler, Registry, ServerHandle};

pub const HEADER_SRV_DECODE: &str = "X-Srv-Decode-Us";
pub const HEADER_SRV_EXEC: &str = "X-Srv-Exec-Us";
pub const HEADER_SRV_ENCODE: &str = "X-Srv-Encode-Us";

pub const SINK_PATH: &str = "/sink";

pub fn invoke_path(op: crate::OpKind) -> String {
    format!("/invoke/{}", op.path_segment())
}
