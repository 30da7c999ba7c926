use std::io::{Read, Write};

use crate::boundary::{BoundaryKey, BoundaryReport, KEY_WIRE_LEN};
use crate::error::{Error, Result};
use crate::pointdata::{decode_points, encode_points, encoded_points_len, PointCloud, TileId, TileMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Tag {
    Pt = 0,
    Tc = 1,
    Pb = 2,
    Bc = 3,
    Fin = 4,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    /// Process tile.
    Pt(TileId),
    /// Tile complete, with the tile's boundary sets.
    Tc(BoundaryReport),
    /// Process boundary: a unified cloud to segment.
    Pb(BoundaryKey, PointCloud),
    /// Boundary complete, with the number of crowns written.
    Bc(BoundaryKey, u32),
    Fin,
}

impl Message {
    pub fn tag(&self) -> Tag {
        match self {
            Message::Pt(_) => Tag::Pt,
            Message::Tc(_) => Tag::Tc,
            Message::Pb(..) => Tag::Pb,
            Message::Bc(..) => Tag::Bc,
            Message::Fin => Tag::Fin,
        }
    }

    /// Size of the framed message on the wire, length prefix included.
    pub fn wire_len(&self) -> usize {
        4 + 1
            + match self {
                Message::Pt(_) => 4,
                Message::Tc(r) => r.wire_len(),
                Message::Pb(_, c) => KEY_WIRE_LEN + encoded_points_len(c.len()),
                Message::Bc(..) => KEY_WIRE_LEN + 4,
                Message::Fin => 0,
            }
    }

    /// Points carried by the message.
    pub fn point_count(&self) -> usize {
        match self {
            Message::Tc(r) => r.point_count(),
            Message::Pb(_, c) => c.len(),
            _ => 0,
        }
    }
}

/// Appends `u32 LE length | u8 tag | payload` to `out`. The length counts tag
/// and payload.
pub fn encode_frame(msg: &Message, map: &TileMap, out: &mut Vec<u8>) -> Result<()> {
    let start = out.len();
    out.extend_from_slice(&[0; 4]);
    out.push(msg.tag() as u8);
    match msg {
        Message::Pt(id) => out.extend_from_slice(&id.0.to_le_bytes()),
        Message::Tc(r) => {
            let pos = map.position(r.tile).ok_or_else(|| Error::protocol(format!("unknown tile {}", r.tile)))?;
            r.encode(pos, out);
        }
        Message::Pb(key, cloud) => {
            key.encode(out);
            encode_points(cloud, out);
        }
        Message::Bc(key, n) => {
            key.encode(out);
            out.extend_from_slice(&n.to_le_bytes());
        }
        Message::Fin => {}
    }
    let len = (out.len() - start - 4) as u32;
    out[start..start + 4].copy_from_slice(&len.to_le_bytes());
    Ok(())
}

/// Decodes one frame body (tag and payload, without the length prefix).
pub fn decode_frame(body: &[u8], map: &TileMap) -> Result<Message> {
    let (&tag, payload) = body.split_first().ok_or_else(|| Error::protocol("empty frame"))?;
    let exact = |want: usize| {
        if payload.len() == want {
            Ok(())
        } else {
            Err(Error::protocol(format!("frame tag {tag}: payload of {} bytes, expected {want}", payload.len())))
        }
    };
    Ok(match tag {
        0 => {
            exact(4)?;
            Message::Pt(TileId(u32::from_le_bytes(payload.try_into().unwrap())))
        }
        1 => Message::Tc(BoundaryReport::decode(payload, map)?),
        2 => {
            let key = BoundaryKey::decode(payload, 1)?;
            let (pts, used) = decode_points(&payload[KEY_WIRE_LEN..], 1 + KEY_WIRE_LEN as u64)?;
            exact(KEY_WIRE_LEN + used)?;
            Message::Pb(key, PointCloud::new(pts))
        }
        3 => {
            exact(KEY_WIRE_LEN + 4)?;
            let key = BoundaryKey::decode(payload, 1)?;
            Message::Bc(key, u32::from_le_bytes(payload[KEY_WIRE_LEN..].try_into().unwrap()))
        }
        4 => {
            exact(0)?;
            Message::Fin
        }
        t => return Err(Error::protocol(format!("unknown message tag {t}"))),
    })
}

pub fn write_frame(w: &mut impl Write, msg: &Message, map: &TileMap) -> Result<usize> {
    let mut buf = Vec::with_capacity(msg.wire_len());
    encode_frame(msg, map, &mut buf)?;
    w.write_all(&buf).map_err(|e| Error::Transport(format!("send failed: {e}")))?;
    w.flush().map_err(|e| Error::Transport(format!("send failed: {e}")))?;
    Ok(buf.len())
}

/// Reads one frame; returns the message and the bytes consumed.
pub fn read_frame(r: &mut impl Read, map: &TileMap) -> Result<(Message, usize)> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(|e| Error::Transport(format!("receive failed: {e}")))?;
    let len = u32::from_le_bytes(len) as usize;
    let mut body = vec![0u8; len];
    r.read_exact(&mut body).map_err(|e| Error::Transport(format!("truncated frame: {e}")))?;
    Ok((decode_frame(&body, map)?, len + 4))
}
