#!/usr/bin/env python3
"""Crafts the pcap fixtures under tests/data with scapy.

Each capture is written next to the canonical log it must ingest to
(home prefix 192.168.1.0/24, name table tests/data/names.txt).
"""
import pathlib
import sys

from scapy.all import ARP, IP, TCP, UDP, Ether, Raw, wrpcap

DEVICE = "192.168.1.50"
GATEWAY = "192.168.1.1"
AUGUST = "52.1.2.3"
NTP = "129.6.15.28"
MAC_DEV = "aa:bb:cc:00:00:50"
MAC_GW = "aa:bb:cc:00:00:01"
BASE = 1_700_000_000


def frame(src, dst, transport, payload_len, ts):
    mac_src, mac_dst = (MAC_DEV, MAC_GW) if src == DEVICE else (MAC_GW, MAC_DEV)
    pkt = Ether(src=mac_src, dst=mac_dst) / IP(src=src, dst=dst, ttl=64) / transport
    if payload_len:
        pkt = pkt / Raw(bytes((i * 7) % 251 for i in range(payload_len)))
    pkt.time = ts
    return pkt


def tcp_d2s(flags, seq, payload, ts):
    return frame(DEVICE, AUGUST, TCP(sport=49157, dport=443, flags=flags, seq=seq), payload, ts)


def tcp_s2d(flags, seq, payload, ts):
    return frame(AUGUST, DEVICE, TCP(sport=443, dport=49157, flags=flags, seq=seq), payload, ts)


def line(t_us, server, port, proto, direction, length):
    return f"{t_us} lock {server} {port} {proto} {direction} {length}"


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
    out.mkdir(parents=True, exist_ok=True)
    (out / "names.txt").write_text(
        "# address -> canonical name\n"
        f"{AUGUST} rbs.august.com\n"
        f"{DEVICE} lock\n"
    )

    # Three data packets: TCP out, TCP in, UDP/NTP out. IP total length is
    # 20 + 20 + payload for TCP and 20 + 8 + payload for UDP.
    three = [
        tcp_d2s("PA", 1000, 597, BASE + 0.250000),
        tcp_s2d("PA", 5000, 197, BASE + 0.382000),
        frame(DEVICE, NTP, UDP(sport=40000, dport=123), 48, BASE + 0.454000),
    ]
    wrpcap(str(out / "three_packets.pcap"), three)
    (out / "three_packets.expected.log").write_text("\n".join([
        line(1_700_000_000_250_000, "rbs.august.com", 443, "TCP", "D2S", 637),
        line(1_700_000_000_382_000, "rbs.august.com", 443, "TCP", "S2D", 237),
        line(1_700_000_000_454_000, NTP, 123, "UDP", "D2S", 76),
    ]) + "\n")

    wrpcap(str(out / "ntp_udp.pcap"),
           [frame(DEVICE, NTP, UDP(sport=40000, dport=123), 48, BASE + 1.0)])

    # Handshake, ARP, LAN-internal DNS, a retransmission and two packets
    # sharing one timestamp.
    mixed = [
        tcp_d2s("S", 999, 0, BASE + 0.100000),
        tcp_s2d("SA", 4999, 0, BASE + 0.110000),
        tcp_d2s("A", 1000, 0, BASE + 0.120000),
        Ether(src=MAC_DEV, dst="ff:ff:ff:ff:ff:ff") / ARP(psrc=DEVICE, pdst=GATEWAY),
        frame(DEVICE, GATEWAY, UDP(sport=40001, dport=53), 30, BASE + 0.130000),
        tcp_d2s("PA", 1000, 597, BASE + 0.250000),
        tcp_d2s("PA", 1000, 597, BASE + 0.450000),
        tcp_s2d("PA", 5000, 197, BASE + 0.500000),
        frame(DEVICE, NTP, UDP(sport=40000, dport=123), 48, BASE + 0.500000),
    ]
    mixed[3].time = BASE + 0.125000
    wrpcap(str(out / "mixed.pcap"), mixed)
    (out / "mixed.expected.log").write_text("\n".join([
        line(1_700_000_000_250_000, "rbs.august.com", 443, "TCP", "D2S", 637),
        line(1_700_000_000_450_000, "rbs.august.com", 443, "TCP", "D2S", 637),
        line(1_700_000_000_500_000, "rbs.august.com", 443, "TCP", "S2D", 237),
        line(1_700_000_000_500_001, NTP, 123, "UDP", "D2S", 76),
    ]) + "\n")


if __name__ == "__main__":
    main()
