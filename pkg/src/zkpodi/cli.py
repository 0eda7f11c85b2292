"""Command-line front end: setup, issue, prove, verify, inspect, sim, bench.

Exit codes: 0 success, 1 verification rejected, 2 usage or I/O error.
Rejection reasons go to stderr as ``reason=<Reason>``.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import secrets
import sys
from pathlib import Path

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from cryptography.hazmat.primitives.serialization import Encoding, NoEncryption, PrivateFormat

from . import bench
from .algebra import CircuitParams, Orthonym
from .authority import LeaPublic, LeaState, ProvisioningError, PseudonymBundle, issue_orthonym, issue_pseudonyms, lea_init
from .circuit import OwnEquationMismatch, SybilCollision
from .sim import ScenarioConfig, run_scenario
from .snark import DecodeError, ProvingKey, VerifyingKey
from .vehicle import InvalidNeighborSignature, decode_podi, encode_podi, generate_podi, verify_podi

PUBLIC_FILE = "lea_pub.bin"
STATE_FILE = "lea_state.json"
ORTHONYM_FILE = "orthonym.secret"


class UsageError(Exception):
    pass


def _rng(seed, *context):
    """Seeded runs derive an independent stream per context so repeated commands stay distinct."""
    if seed is None:
        return secrets.SystemRandom()
    return random.Random(":".join(str(x) for x in (seed, *context)))


def _key_name(kind: str, params: CircuitParams) -> str:
    return f"{kind}_{params.nx}_{params.np}_{params.k}.bin"


def _write_private(path: Path, data: bytes) -> None:
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.chmod(path, 0o600)


def _save_state(lea_dir: Path, state: LeaState) -> None:
    raw = state.signing_key.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())
    doc = {
        "signing_key": raw.hex(),
        "params": [str(p) for p in sorted(state.registry)],
        "issued": sorted(p.hex() for p in state.issued),
        "provisioned": sorted(state.provisioned),
    }
    _write_private(lea_dir / STATE_FILE, json.dumps(doc, indent=2).encode() + b"\n")


def _load_state(lea_dir: Path) -> LeaState:
    doc = json.loads((lea_dir / STATE_FILE).read_text())
    registry = {}
    for text in doc["params"]:
        p = CircuitParams.parse(text)
        registry[p] = (
            ProvingKey.from_bytes((lea_dir / _key_name("pk", p)).read_bytes()),
            VerifyingKey.from_bytes((lea_dir / _key_name("vk", p)).read_bytes()),
        )
    key = Ed25519PrivateKey.from_private_bytes(bytes.fromhex(doc["signing_key"]))
    return LeaState(key, registry, {bytes.fromhex(p) for p in doc["issued"]}, set(doc["provisioned"]))


def cmd_setup(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params_list = args.params or [CircuitParams(4, 8, 1)]
    state = lea_init(params_list, _rng(args.seed, "setup"))
    for p, (pk, vk) in state.registry.items():
        (out / _key_name("pk", p)).write_bytes(pk.to_bytes())
        (out / _key_name("vk", p)).write_bytes(vk.to_bytes())
    (out / PUBLIC_FILE).write_bytes(state.public().to_bytes())
    _save_state(out, state)
    print(f"lea public key {state.public_key.hex()}")
    for p in sorted(state.registry):
        print(f"keys for nx,np,k={p} written")
    return 0


def cmd_issue(args) -> int:
    lea_dir, out = Path(args.lea), Path(args.out)
    state = _load_state(lea_dir)
    params = args.params or sorted(state.registry)[0]
    if params not in state.registry:
        raise UsageError(f"LEA has no keys for {params}")
    rng = _rng(args.seed, "issue", args.vehicle)
    orthonym = issue_orthonym(state, args.vehicle, params, rng)
    bundles = issue_pseudonyms(state, orthonym, args.count, params, rng)
    out.mkdir(parents=True, exist_ok=True)
    _write_private(out / ORTHONYM_FILE, orthonym.to_bytes())
    for i, bundle in enumerate(bundles):
        (out / f"bundle_{i}.bin").write_bytes(bundle.to_bytes())
    _save_state(lea_dir, state)
    noun = "bundle" if len(bundles) == 1 else "bundles"
    print(f"vehicle {args.vehicle}: orthonym and {len(bundles)} {noun} written to {out}")
    return 0


def cmd_prove(args) -> int:
    lea = LeaPublic.from_bytes(Path(args.lea_pub).read_bytes())
    pk = ProvingKey.from_bytes(Path(args.pk).read_bytes())
    orthonym = Orthonym.from_bytes(Path(args.orthonym).read_bytes())
    own = PseudonymBundle.from_bytes(Path(args.own).read_bytes())
    neighbors = [PseudonymBundle.from_bytes(Path(p).read_bytes()) for p in args.neighbor]
    try:
        msg = generate_podi(own, orthonym, neighbors, lea.public_key, pk, _rng(args.seed, "prove", own.pseudonym.hex()))
    except SybilCollision as exc:
        print(f"reason=SybilCollision index={exc.index}", file=sys.stderr)
        return 1
    except OwnEquationMismatch:
        print("reason=OwnEquationMismatch", file=sys.stderr)
        return 1
    except InvalidNeighborSignature as exc:
        print(f"reason=InvalidNeighborSignature index={exc.index}", file=sys.stderr)
        return 1
    data = encode_podi(msg)
    Path(args.out).write_bytes(data)
    print(f"message {len(data)} bytes, proof {msg.proof.hex()}")
    return 0


def cmd_verify(args) -> int:
    lea = LeaPublic.from_bytes(Path(args.lea_pub).read_bytes())
    data = Path(args.msg).read_bytes()
    if args.hex:
        data = bytes.fromhex(data.decode("ascii").strip())
    try:
        params = decode_podi(data).params
    except DecodeError:
        params = None
    vk = lea.verifying_keys.get(params) if params else None
    if vk is None:
        # malformed frames and unknown shapes are both reported by verify_podi
        vk = next(iter(lea.verifying_keys.values()))
    verdict = verify_podi(data, lea.public_key, vk)
    if verdict.accepted:
        print("OK")
        return 0
    print(f"reason={verdict}", file=sys.stderr)
    return 1


def cmd_inspect(args) -> int:
    msg = decode_podi(Path(args.msg).read_bytes())
    print(f"params      {msg.params}")
    print(f"own         P={msg.own.pseudonym.hex()} y={msg.own.constant:064x}")
    for j, b in enumerate(msg.neighbors):
        print(f"neighbor[{j}] P={b.pseudonym.hex()} y={b.constant:064x}")
    print(f"proof       {msg.proof.hex()}")
    return 0


def cmd_sim(args) -> int:
    config = ScenarioConfig.from_text(Path(args.config).read_text())
    if args.seed is not None:
        config = ScenarioConfig(config.params, config.honest_count, config.attacker, args.seed)
    report = run_scenario(config)
    sys.stdout.write(report.to_text())
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return 0


def cmd_bench(args) -> int:
    grid = bench.parse_grid(args.grid) if args.grid else (args.params or bench.default_grid())
    records = bench.run_sweep(grid, args.trials, args.seed, progress=lambda r: print(
        f"nx={r.nx} np={r.np} k={r.k} tp={r.tp_ms:.3f}ms tv={r.tv_ms:.3f}ms", file=sys.stderr))  # fmt: skip
    bench.emit_csv(records, args.out)
    print(bench.summary(records))
    return 0


def _params(text: str) -> CircuitParams:
    try:
        return CircuitParams.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zkpodi", description="Zero-knowledge proof of distinct identity toolkit")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("setup", help="LEA key generation and per-circuit trusted setup")
    p.add_argument("--params", type=_params, action="append", help="nx,np,k (repeatable; default 4,8,1)")
    p.add_argument("--out", required=True, help="LEA directory")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_setup)

    p = sub.add_parser("issue", help="provision a vehicle with an orthonym and sealed bundles")
    p.add_argument("--lea", required=True, help="LEA directory written by setup")
    p.add_argument("--vehicle", required=True, help="vehicle handle")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--params", type=_params)
    p.add_argument("--out", required=True, help="vehicle directory")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_issue)

    p = sub.add_parser("prove", help="build a PoDI message")
    p.add_argument("--lea-pub", required=True)
    p.add_argument("--pk", required=True)
    p.add_argument("--orthonym", required=True)
    p.add_argument("--own", required=True, help="own bundle file")
    p.add_argument("--neighbor", action="append", required=True, help="neighbor bundle file (repeatable)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify", help="verify a PoDI message")
    p.add_argument("--lea-pub", required=True)
    p.add_argument("--msg", required=True)
    p.add_argument("--hex", action="store_true", help="message file holds a hex dump")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("inspect", help="print the fields of a PoDI message in hex")
    p.add_argument("--msg", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("sim", help="run a broadcast scenario")
    p.add_argument("--config", required=True, help="key = value scenario file")
    p.add_argument("--csv", help="also write the report as CSV")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("bench", help="prover/verifier timing sweep")
    p.add_argument("--grid", help="'default' or 'nx,np,k;nx,np,k;...'")
    p.add_argument("--params", type=_params, action="append")
    p.add_argument("--trials", type=int, default=bench.DEFAULT_TRIALS)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, UsageError, ProvisioningError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
