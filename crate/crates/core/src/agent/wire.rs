//! Length-delimited JSON framing and the external transports.
//!
//! A frame is the payload length in ASCII decimal, a newline, then exactly
//! that many bytes of JSON. The harness sends one [`AgentRequest`] per turn
//! and expects one [`AgentResponse`] back.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::{Agent, AgentError, AgentRequest, AgentResponse};

pub const MAX_FRAME: usize = 16 << 20;

pub fn write_frame(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    writeln!(w, "{}", payload.len())?;
    w.write_all(payload)?;
    w.flush()
}

/// Read one frame; `Ok(None)` on clean end of stream.
pub fn read_frame(r: &mut impl BufRead) -> Result<Option<Vec<u8>>, AgentError> {
    let mut header = String::new();
    let n = r
        .read_line(&mut header)
        .map_err(|e| AgentError::Disconnected(e.to_string()))?;
    if n == 0 {
        return Ok(None);
    }
    let len: usize = header
        .trim()
        .parse()
        .map_err(|_| AgentError::Protocol(format!("bad frame header {:?}", header.trim())))?;
    if len > MAX_FRAME {
        return Err(AgentError::Protocol(format!("frame of {len} bytes exceeds limit")));
    }
    let mut buf = vec![0; len];
    r.read_exact(&mut buf)
        .map_err(|e| AgentError::Disconnected(e.to_string()))?;
    Ok(Some(buf))
}

pub fn encode_request(req: &AgentRequest) -> Vec<u8> {
    serde_json::to_vec(req).expect("request serializes")
}

/// Decode and check a response payload.
pub fn decode_response(bytes: &[u8]) -> Result<AgentResponse, AgentError> {
    let resp: AgentResponse =
        serde_json::from_slice(bytes).map_err(|e| AgentError::Protocol(e.to_string()))?;
    if resp.action.trim().is_empty() {
        return Err(AgentError::Protocol("empty action".into()));
    }
    if resp.action.contains('\n') {
        return Err(AgentError::Protocol("multi-line action".into()));
    }
    Ok(resp)
}

type Inbox = Receiver<Result<Vec<u8>, AgentError>>;

/// Pump frames from `r` into a channel so reads can honor a deadline.
fn spawn_reader(r: impl Read + Send + 'static) -> Inbox {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut r = BufReader::new(r);
        loop {
            match read_frame(&mut r) {
                Ok(Some(frame)) => {
                    if tx.send(Ok(frame)).is_err() {
                        return;
                    }
                }
                Ok(None) => {
                    let _ = tx.send(Err(AgentError::Disconnected("end of stream".into())));
                    return;
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                    return;
                }
            }
        }
    });
    rx
}

struct Channel<W: Write> {
    out: W,
    inbox: Inbox,
    broken: Option<AgentError>,
}

impl<W: Write> Channel<W> {
    fn exchange(&mut self, req: &AgentRequest, deadline: Duration) -> Result<AgentResponse, AgentError> {
        if let Some(e) = &self.broken {
            return Err(AgentError::Disconnected(e.to_string()));
        }
        write_frame(&mut self.out, &encode_request(req))
            .map_err(|e| AgentError::Disconnected(e.to_string()))?;
        match self.inbox.recv_timeout(deadline) {
            Ok(Ok(bytes)) => decode_response(&bytes),
            Ok(Err(e)) => {
                self.broken = Some(e.clone());
                Err(e)
            }
            Err(RecvTimeoutError::Timeout) => Err(AgentError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(AgentError::Disconnected("reader closed".into())),
        }
    }
}

/// An agent process speaking the protocol on its stdin/stdout.
pub struct SubprocessAgent {
    id: String,
    child: Child,
    chan: Channel<ChildStdin>,
}

impl SubprocessAgent {
    pub fn spawn(cmdline: &str, id: String) -> Result<Self, AgentError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmdline)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AgentError::Disconnected(format!("cannot start {cmdline}: {e}")))?;
        let out = child.stdin.take().expect("piped stdin");
        let inbox = spawn_reader(child.stdout.take().expect("piped stdout"));
        Ok(SubprocessAgent { id, child, chan: Channel { out, inbox, broken: None } })
    }
}

impl Drop for SubprocessAgent {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Agent for SubprocessAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn synthetic(&self) -> bool {
        false
    }

    fn next_action(&mut self, req: &AgentRequest, deadline: Duration) -> Result<AgentResponse, AgentError> {
        self.chan.exchange(req, deadline)
    }
}

/// An agent listening on a TCP socket; the harness connects.
pub struct TcpAgent {
    id: String,
    chan: Channel<TcpStream>,
}

impl TcpAgent {
    pub fn connect(addr: &str, id: String) -> Result<Self, AgentError> {
        let stream = TcpStream::connect(addr)
            .map_err(|e| AgentError::Disconnected(format!("cannot connect to {addr}: {e}")))?;
        let _ = stream.set_nodelay(true);
        let reader = stream
            .try_clone()
            .map_err(|e| AgentError::Disconnected(e.to_string()))?;
        Ok(TcpAgent { id, chan: Channel { out: stream, inbox: spawn_reader(reader), broken: None } })
    }
}

impl Drop for TcpAgent {
    fn drop(&mut self) {
        let _ = self.chan.out.shutdown(std::net::Shutdown::Both);
    }
}

impl Agent for TcpAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn synthetic(&self) -> bool {
        false
    }

    fn next_action(&mut self, req: &AgentRequest, deadline: Duration) -> Result<AgentResponse, AgentError> {
        self.chan.exchange(req, deadline)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;
    use std::net::TcpListener;

    fn req(turn: u32) -> AgentRequest {
        AgentRequest {
            task_prompt: "p".into(),
            turn,
            history: Vec::new(),
            remaining_turns: 10,
            remaining_time_s: 5.0,
        }
    }

    #[test]
    fn frame_roundtrip() {
        let mut buf = Vec::new();
        write_frame(&mut buf, b"{\"action\":\"STOP\"}").unwrap();
        write_frame(&mut buf, b"").unwrap();
        let mut r = Cursor::new(buf);
        assert_eq!(read_frame(&mut r).unwrap().unwrap(), b"{\"action\":\"STOP\"}");
        assert_eq!(read_frame(&mut r).unwrap().unwrap(), b"");
        assert_eq!(read_frame(&mut r).unwrap(), None);
    }

    #[test]
    fn malformed_inputs_are_protocol_errors() {
        let mut r = Cursor::new(b"abc\n{}".to_vec());
        assert!(matches!(read_frame(&mut r), Err(AgentError::Protocol(_))));
        assert!(matches!(decode_response(b"not json"), Err(AgentError::Protocol(_))));
        assert!(matches!(decode_response(br#"{"action":"  "}"#), Err(AgentError::Protocol(_))));
        assert!(matches!(decode_response(br#"{"action":"x","tokens_in":-1}"#), Err(AgentError::Protocol(_))));
        assert!(matches!(decode_response(br#"{"action":"a\nb"}"#), Err(AgentError::Protocol(_))));
    }

    proptest! {
        #[test]
        fn decode_is_total(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
            let _ = decode_response(&bytes);
            let _ = read_frame(&mut Cursor::new(bytes));
        }
    }

    #[test]
    fn subprocess_echo_agent() {
        // Answers every request with a fixed command, counting tokens.
        let script = r#"
while IFS= read -r len; do
  head -c "$len" > /dev/null
  body='{"action":"r1: show run","tokens_in":3,"tokens_out":2,"thought":"look"}'
  printf '%s\n%s' "${#body}" "$body"
done
"#;
        let mut a = SubprocessAgent::spawn(script, "echo".into()).unwrap();
        for t in 1..=3 {
            let r = a.next_action(&req(t), Duration::from_secs(5)).unwrap();
            assert_eq!(r.action, "r1: show run");
            assert_eq!((r.tokens_in, r.tokens_out), (3, 2));
            assert_eq!(r.thought.as_deref(), Some("look"));
        }
    }

    #[test]
    fn silent_subprocess_times_out() {
        let mut a = SubprocessAgent::spawn("sleep 30", "mute".into()).unwrap();
        let t0 = std::time::Instant::now();
        assert_eq!(a.next_action(&req(1), Duration::from_millis(200)), Err(AgentError::Timeout));
        assert!(t0.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn exiting_subprocess_disconnects() {
        let mut a = SubprocessAgent::spawn("true", "gone".into()).unwrap();
        let r = a.next_action(&req(1), Duration::from_secs(5));
        assert!(matches!(r, Err(AgentError::Disconnected(_))));
    }

    #[test]
    fn tcp_agent_roundtrip() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut r = BufReader::new(stream.try_clone().unwrap());
            let mut w = stream;
            let mut turns = Vec::new();
            while let Ok(Some(frame)) = read_frame(&mut r) {
                let req: AgentRequest = serde_json::from_slice(&frame).unwrap();
                turns.push(req.turn);
                let action = if req.turn < 2 { "r1: show ip route" } else { "STOP" };
                let body = serde_json::to_vec(&AgentResponse::action(action)).unwrap();
                write_frame(&mut w, &body).unwrap();
            }
            turns
        });
        let mut a = TcpAgent::connect(&addr.to_string(), "tcp".into()).unwrap();
        assert_eq!(a.next_action(&req(1), Duration::from_secs(5)).unwrap().action, "r1: show ip route");
        assert!(a.next_action(&req(2), Duration::from_secs(5)).unwrap().is_stop());
        drop(a);
        assert_eq!(server.join().unwrap(), vec![1, 2]);
    }
}
