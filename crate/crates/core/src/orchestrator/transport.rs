//! Channel and loopback-socket links between master and slaves.

use std::io::{BufReader, BufWriter};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{Receiver, Sender};

use super::message::{read_frame, write_frame, Message};
use super::slave::SlaveLink;
use super::SlaveId;
use crate::error::{Error, Result};
use crate::pointdata::TileMap;

/// What slaves (or their reader threads) deliver to the master loop.
pub(crate) enum Envelope {
    Msg(SlaveId, Message, usize),
    Failed(SlaveId, String),
}

pub(crate) trait MasterLink {
    fn recv(&mut self) -> Result<(SlaveId, Message, usize)>;
    fn send(&mut self, to: SlaveId, msg: Message) -> Result<usize>;
}

fn unwrap_envelope(e: std::result::Result<Envelope, std::sync::mpsc::RecvError>) -> Result<(SlaveId, Message, usize)> {
    match e {
        Ok(Envelope::Msg(s, m, n)) => Ok((s, m, n)),
        Ok(Envelope::Failed(s, why)) => Err(Error::Transport(format!("slave {s} failed: {why}"))),
        Err(_) => Err(Error::Transport("all slaves disconnected".into())),
    }
}

pub(crate) struct ChannelMaster {
    pub inbox: Receiver<Envelope>,
    pub outboxes: Vec<Sender<Message>>,
}

impl MasterLink for ChannelMaster {
    fn recv(&mut self) -> Result<(SlaveId, Message, usize)> {
        unwrap_envelope(self.inbox.recv())
    }

    fn send(&mut self, to: SlaveId, msg: Message) -> Result<usize> {
        let n = msg.wire_len();
        self.outboxes[to].send(msg).map_err(|_| Error::Transport(format!("slave {to} hung up")))?;
        Ok(n)
    }
}

pub(crate) struct ChannelSlave {
    pub id: SlaveId,
    pub inbox: Receiver<Message>,
    pub outbox: Sender<Envelope>,
}

impl SlaveLink for ChannelSlave {
    fn send(&mut self, msg: Message) -> Result<()> {
        let n = msg.wire_len();
        self.outbox.send(Envelope::Msg(self.id, msg, n)).map_err(|_| Error::Transport("master hung up".into()))
    }

    fn recv(&mut self) -> Result<Message> {
        self.inbox.recv().map_err(|_| Error::Transport("master hung up".into()))
    }
}

/// Master side of the socket transport: one reader thread per connection
/// feeds a single queue so the master still handles one message at a time.
pub(crate) struct TcpMaster {
    inbox: Receiver<Envelope>,
    writers: Vec<BufWriter<TcpStream>>,
    map: TileMap,
}

impl TcpMaster {
    /// Accepts `workers` connections; slave ids follow accept order.
    pub fn accept(listener: &TcpListener, workers: usize, map: &TileMap) -> Result<Self> {
        let (tx, inbox) = std::sync::mpsc::channel();
        let mut writers = Vec::with_capacity(workers);
        for id in 0..workers {
            let (stream, _) = listener.accept()?;
            stream.set_nodelay(true)?;
            let reader = stream.try_clone()?;
            writers.push(BufWriter::new(stream));
            let tx = tx.clone();
            let map = map.clone();
            std::thread::spawn(move || {
                let mut r = BufReader::new(reader);
                loop {
                    let env = match read_frame(&mut r, &map) {
                        Ok((m, n)) => Envelope::Msg(id, m, n),
                        Err(e) => Envelope::Failed(id, e.to_string()),
                    };
                    let failed = matches!(env, Envelope::Failed(..));
                    if tx.send(env).is_err() || failed {
                        return;
                    }
                }
            });
        }
        Ok(Self { inbox, writers, map: map.clone() })
    }
}

impl MasterLink for TcpMaster {
    fn recv(&mut self) -> Result<(SlaveId, Message, usize)> {
        unwrap_envelope(self.inbox.recv())
    }

    fn send(&mut self, to: SlaveId, msg: Message) -> Result<usize> {
        write_frame(&mut self.writers[to], &msg, &self.map)
    }
}

/// Slave end of a loopback connection.
pub struct TcpSlaveLink {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    map: TileMap,
}

pub fn connect_slave(addr: impl ToSocketAddrs, map: &TileMap) -> Result<TcpSlaveLink> {
    let stream = TcpStream::connect(addr).map_err(|e| Error::Transport(format!("connect failed: {e}")))?;
    stream.set_nodelay(true)?;
    let reader = BufReader::new(stream.try_clone()?);
    Ok(TcpSlaveLink { reader, writer: BufWriter::new(stream), map: map.clone() })
}

impl SlaveLink for TcpSlaveLink {
    fn send(&mut self, msg: Message) -> Result<()> {
        write_frame(&mut self.writer, &msg, &self.map).map(|_| ())
    }

    fn recv(&mut self) -> Result<Message> {
        read_frame(&mut self.reader, &self.map).map(|(m, _)| m)
    }
}
