"""Seeded synthetic corpus generator.

Reproduces the schema landscape of a multi-sensor honeypot log: every record
wraps one of 13 payload templates (connection trackers, p0f-style
fingerprinters, snort-style alerts, URL/malware sensors) inside shared
top-level fields, with struct-wrapped ids and timestamps, delimiter-packed
signature strings, fixed-length lists, and one planted constant column
(normalized=true) for the single-value pruner to find.

Generation is deterministic for a fixed seed: re-running writes the same
bytes.
"""

from __future__ import annotations

import json
import random
from datetime import datetime, timezone

_COMMON_HEAD = ["id", "schemaType"]
_COMMON_TAIL = ["timestampDate", "ident", "channel"]

TEMPLATES: list[list[str]] = [
    _COMMON_HEAD + ["remote_host", "connection_protocol", "local_port",
                    "connection_type", "remote_hostname", "remote_port",
                    "local_host", "connection_transport"] + _COMMON_TAIL,
    _COMMON_HEAD + ["client_ip", "app", "timestamp", "server_ip", "params",
                    "raw_sig", "dist", "client_port", "mod", "server_port",
                    "subject"] + _COMMON_TAIL,
    _COMMON_HEAD + ["client_ip", "server_ip", "timestamp", "uptime", "subject",
                    "client_port", "raw_freq", "server_port", "mod"] + _COMMON_TAIL,
    _COMMON_HEAD + ["client_ip", "server_ip", "timestamp", "reason", "raw_hits",
                    "subject", "client_port", "mod", "server_port"] + _COMMON_TAIL,
    _COMMON_HEAD + ["client_ip", "server_ip", "timestamp", "os", "params",
                    "raw_sig", "dist", "client_port", "mod", "server_port",
                    "subject"] + _COMMON_TAIL,
    _COMMON_HEAD + ["client_ip", "server_ip", "timestamp", "link", "subject",
                    "client_port", "mod", "server_port", "raw_mtu"] + _COMMON_TAIL,
    _COMMON_HEAD + ["hostIP", "loggedin", "commands", "unknownCommands",
                    "startTime", "peerPort", "version", "urls", "session",
                    "ttylog", "credentials", "endTime", "peerIP",
                    "hostPort"] + _COMMON_TAIL,
    _COMMON_HEAD + ["sensorid", "request_raw", "request_url", "filename",
                    "source", "pattern", "version", "time"] + _COMMON_TAIL,
    _COMMON_HEAD + ["tos", "ttl", "ethdst", "ethetype", "udplength", "sensor",
                    "priority", "destination_ip", "timestamp", "signature",
                    "classification", "ethlen", "dgnlen", "destination_port",
                    "header", "source_port", "proto", "source_ip", "iplen",
                    "ethsrc"] + _COMMON_TAIL,
    _COMMON_HEAD + ["destination_port", "timestamp", "tcpflags", "tcpwin",
                    "dgnlen", "tcpack", "classification", "sensor", "proto",
                    "tcpseq", "header", "source_ip", "iplen", "tos", "ttl",
                    "ethetype", "priority", "destination_ip", "tcpen", "ethlen",
                    "ethdst", "source_port", "signature", "ethsrc"] + _COMMON_TAIL,
    _COMMON_HEAD + ["timestamp", "destination_ip", "dgnlen", "classification",
                    "sensor", "proto", "header", "source_ip", "iplen", "tos",
                    "ttl", "ethetype", "priority", "icmpcode", "icmpseq",
                    "ethlen", "ethsrc", "ethdst", "icmpid", "signature",
                    "icmptype"] + _COMMON_TAIL,
    _COMMON_HEAD + ["daddr", "md5", "url", "dport", "sport", "sha512",
                    "saddr"] + _COMMON_TAIL,
    _COMMON_HEAD + ["url", "@timestamp", "honeypot", "payloadCommand",
                    "headers", "method", "payloadMd5", "form", "payloadBinary",
                    "payloadResource", "type", "source"] + _COMMON_TAIL,
]

# Field shape notes for readers and tests: TIME_FIELDS parse as RFC 3339
# text, LIST_FIELDS are fixed-length lists, STRUCT_FIELDS one-key objects,
# NULL_FIELDS always null, and raw_sig is a ':'-packed string whose fifth
# part re-splits on ','.
TIME_FIELDS = {"timestamp", "@timestamp", "timestampDate", "time", "startTime", "endTime"}
LIST_FIELDS = {"params": 3, "commands": 2, "urls": 2, "credentials": 2}
STRUCT_FIELDS = {"headers": ("ua", "host")}
NULL_FIELDS = {"unknownCommands"}
RAW_SIG_PARTS = 8  # seven ':' per signature, constant within a template

_IP_FIELDS = {"hostIP", "peerIP", "saddr", "daddr", "remote_host", "local_host"}
_PORT_FIELDS = {"peerPort", "hostPort", "dport", "sport"}
_INT_FIELDS = {"tos", "ttl", "iplen", "ethlen", "dgnlen", "udplength", "tcpwin",
               "tcpseq", "tcpack", "icmpcode", "icmpseq", "icmpid", "priority",
               "dist", "raw_mtu", "raw_hits", "tcpen"}
_FLOAT_FIELDS = {"uptime", "raw_freq"}
_MAC_FIELDS = {"ethsrc", "ethdst"}

_CHANNELS = ("events", "alerts", "flows")
_IDENTS = ("sensor-a", "sensor-b", "sensor-c", "sensor-d", "sensor-e")
_PROTOCOLS = ("tcp", "udp", "icmp")


def _hex(rng: random.Random, digits: int) -> str:
    return "".join(rng.choice("0123456789abcdef") for _ in range(digits))


def _ip(rng: random.Random) -> str:
    return f"{rng.randrange(1, 224)}.{rng.randrange(256)}.{rng.randrange(256)}.{rng.randrange(1, 255)}"


def _mac(rng: random.Random) -> str:
    return "-".join(_hex(rng, 2) for _ in range(6))


def _rfc3339(rng: random.Random) -> str:
    # Uniform over 2016-2017 so the year window column stays multi-valued.
    utc = rng.randrange(1451606400, 1514764800)
    local = datetime.fromtimestamp(utc + 7200, timezone.utc)
    frac = rng.randrange(10**9)
    return local.strftime("%Y-%m-%dT%H:%M:%S") + f".{frac:09d}+02:00"


def _url(rng: random.Random) -> str:
    host = f"host-{rng.randrange(50)}.example"
    path = f"/p{rng.randrange(1000)}"
    if rng.random() < 0.5:
        return f"http://{host}:8080{path}"  # ':' count varies, so no splitting
    return f"http://{host}{path}"


def _raw_sig(rng: random.Random) -> str:
    mss = rng.choice((512, 1024, 1460))
    wscale = rng.randrange(15)
    return (f"4:{rng.randrange(32, 255)}:0:{rng.choice((1400, 1460, 1500))}:"
            f"{mss},{wscale}:mss,sok,ts:df,id+:{rng.randrange(3)}")


def _value(field: str, rng: random.Random, schema_index: int):
    if field in NULL_FIELDS:
        return None
    if field in TIME_FIELDS:
        return _rfc3339(rng)
    if field in STRUCT_FIELDS:
        return {key: f"{key}-{rng.randrange(40)}" for key in STRUCT_FIELDS[field]}
    if field in LIST_FIELDS:
        n = LIST_FIELDS[field]
        if field == "params":
            return [rng.randrange(512) for _ in range(n)]
        return [f"{field[:-1]}-{rng.randrange(200)}" for _ in range(n)]
    if field == "raw_sig":
        return _raw_sig(rng)
    if field == "id":
        return _hex(rng, 12)
    if field == "schemaType":
        return str(schema_index)
    if field in ("proto", "connection_protocol", "connection_transport"):
        return rng.choice(_PROTOCOLS)
    if field in _IP_FIELDS or field.endswith("_ip"):
        return _ip(rng)
    if field in _PORT_FIELDS or field.endswith("_port"):
        return rng.randrange(1, 65536)
    if field in _INT_FIELDS:
        return rng.randrange(0, 65536)
    if field in _FLOAT_FIELDS:
        return round(rng.uniform(0.0, 5000.0), 3)
    if field in _MAC_FIELDS:
        return _mac(rng)
    if field in ("url", "request_url"):
        return _url(rng)
    if field == "honeypot":
        return rng.choice(("19", "20", "21"))
    if field == "payloadCommand":
        return rng.choice(("wget", "curl", ""))
    if field == "loggedin":
        return rng.choice(("true", "false"))
    if field == "method":
        return rng.choice(("GET", "POST", "HEAD"))
    if field == "tcpflags":
        return rng.choice(("S", "SA", "PA", "FA", "R"))
    if field == "mod":
        return rng.choice(("p0f", "suricata", "dionaea"))
    if field == "os":
        return rng.choice(("Linux", "Windows", "FreeBSD"))
    if field == "md5" or field == "payloadMd5":
        return _hex(rng, 32)
    if field == "sha512":
        return _hex(rng, 128)
    if field == "session":
        return _hex(rng, 16)
    if field == "ttylog":
        return f"ttylog/{_hex(rng, 8)}"
    if field == "filename":
        return f"mal_{_hex(rng, 8)}.bin"
    if field == "request_raw":
        return f"GET /p{rng.randrange(1000)} HTTP/1.1"
    if field == "version":
        return rng.choice(("1.0", "2.0", "2.1"))
    if field == "subject":
        return f"host-{rng.randrange(80)}.example"
    if field == "signature":
        return f"ET-SCAN-{rng.randrange(40)}"
    if field == "classification":
        return rng.choice(("attempted-recon", "bad-unknown", "misc-activity"))
    if field == "sensor" or field == "sensorid":
        return rng.choice(("s1", "s2", "s3", "s4"))
    if field == "header":
        return _hex(rng, 10)
    # generic text field
    return f"{field}-{rng.randrange(400)}"


def make_record(template: list[str], schema_index: int, rng: random.Random) -> dict:
    payload = {field: _value(field, rng, schema_index) for field in template}
    return {
        "channel": rng.choice(_CHANNELS),
        "ident": rng.choice(_IDENTS),
        "normalized": True,
        "_id": {"$oid": _hex(rng, 24)},
        "timestamp": {"$date": _rfc3339(rng)},
        "payload": payload,
    }


def generate_corpus(path, seed: int = 42, records_per_schema: int = 100,
                    templates: list[list[str]] | None = None) -> int:
    """Write an interleaved JSONL corpus; returns the line count.

    Templates rotate round-robin so every structure appears early (the
    classifier samples leading records). Deterministic for a fixed seed.
    """
    templates = templates if templates is not None else TEMPLATES
    rng = random.Random(seed)
    lines = 0
    with open(path, "w", encoding="utf-8") as fh:
        for _ in range(records_per_schema):
            for index, template in enumerate(templates):
                record = make_record(template, index, rng)
                fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
                fh.write("\n")
                lines += 1
    return lines
