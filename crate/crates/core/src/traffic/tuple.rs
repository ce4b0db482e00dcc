use std::net::IpAddr;

use sha2::{Digest, Sha256};

use crate::model::FlowId;

/// Flow id of a 5-tuple: the first 8 bytes of SHA-256 over the canonical
/// encoding (addresses as 16-byte IPv6, IPv4 mapped; ports big-endian; protocol).
pub fn five_tuple_to_flow_id(
    src_ip: IpAddr,
    dst_ip: IpAddr,
    src_port: u16,
    dst_port: u16,
    proto: u8,
) -> FlowId {
    let canon = |ip: IpAddr| match ip {
        IpAddr::V4(v4) => v4.to_ipv6_mapped().octets(),
        IpAddr::V6(v6) => v6.octets(),
    };
    let mut h = Sha256::new();
    h.update(canon(src_ip));
    h.update(canon(dst_ip));
    h.update(src_port.to_be_bytes());
    h.update(dst_port.to_be_bytes());
    h.update([proto]);
    let d = h.finalize();
    FlowId(u64::from_le_bytes(d[..8].try_into().expect("8 bytes")))
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;
    use std::net::{Ipv4Addr, Ipv6Addr};

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn v4(a: [u8; 4]) -> IpAddr {
        IpAddr::V4(Ipv4Addr::from(a))
    }

    #[test]
    fn same_tuple_same_id() {
        let a = five_tuple_to_flow_id(v4([10, 0, 0, 1]), v4([10, 0, 0, 2]), 1234, 80, 6);
        let b = five_tuple_to_flow_id(v4([10, 0, 0, 1]), v4([10, 0, 0, 2]), 1234, 80, 6);
        assert_eq!(a, b);
    }

    #[test]
    fn port_change_changes_id() {
        let a = five_tuple_to_flow_id(v4([10, 0, 0, 1]), v4([10, 0, 0, 2]), 1234, 80, 6);
        let b = five_tuple_to_flow_id(v4([10, 0, 0, 1]), v4([10, 0, 0, 2]), 1235, 80, 6);
        let c = five_tuple_to_flow_id(v4([10, 0, 0, 2]), v4([10, 0, 0, 1]), 1234, 80, 6);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn v4_equals_its_mapped_v6() {
        let mapped = IpAddr::V6(Ipv4Addr::new(1, 2, 3, 4).to_ipv6_mapped());
        let a = five_tuple_to_flow_id(v4([1, 2, 3, 4]), IpAddr::V6(Ipv6Addr::LOCALHOST), 1, 2, 17);
        let b = five_tuple_to_flow_id(mapped, IpAddr::V6(Ipv6Addr::LOCALHOST), 1, 2, 17);
        assert_eq!(a, b);
    }

    #[test]
    fn no_collisions_among_random_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tuples = HashSet::new();
        let mut ids = HashSet::new();
        while tuples.len() < 1_000_000 {
            let t: ([u8; 4], [u8; 4], u16, u16, u8) =
                (rng.gen(), rng.gen(), rng.gen(), rng.gen(), rng.gen());
            if tuples.insert(t) {
                assert!(ids.insert(five_tuple_to_flow_id(v4(t.0), v4(t.1), t.2, t.3, t.4)));
            }
        }
    }
}
