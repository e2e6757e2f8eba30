"""Talk to a live session server with nothing but a socket and json.

Frames are single JSON objects, one per line: {"type", "seq", "payload"}.
The server speaks first with Hello and expects a Hello back before any
command; sequence numbers must strictly increase per direction.
"""

import json
import socket

from gazeforms import EvolutionConfig, InteractionMode, SessionConfig
from gazeforms.gateway import GatewayServer

config = SessionConfig(evolution=EvolutionConfig(rng_seed=5), resolution=8,
                       interaction_mode=InteractionMode.MOUSE)
server = GatewayServer(config, port=0)
server.start()
print(f"server listening on {server.host}:{server.port}")

sock = socket.create_connection((server.host, server.port), timeout=10.0)
wire = sock.makefile("r", encoding="utf-8")
seq = 0


def send(mtype, **payload):
    global seq
    seq += 1
    sock.sendall((json.dumps({"type": mtype, "seq": seq,
                              "payload": payload}) + "\n").encode())
    print(f"-> {mtype} (seq {seq}) {payload}")


def recv():
    frame = json.loads(wire.readline())
    return frame


hello = recv()
print(f"<- {hello['type']}: protocol {hello['payload']['protocol']}, "
      f"mode {hello['payload']['mode']}")
send("Hello", protocol=hello["payload"]["protocol"])

send("StartStage", stage="directed", target="small,green,rectangle")
generation = recv()
cells = generation["payload"]["cells"]
solid = [c["cell"] for c in cells if c["mesh"]["indices"]]
print(f"<- {generation['type']}: generation "
      f"{generation['payload']['generation']}, {len(solid)}/15 cells solid")

send("SelectionSubmit", cells=solid[:2])
nxt = recv()
print(f"<- {nxt['type']}: generation {nxt['payload']['generation']} "
      f"(selection accepted, population advanced)")

send("Snapshot")
ack = recv()
print(f"<- {ack['type']}: {ack['payload']}")

send("Terminate", reason="demo over")
end = recv()
print(f"<- {end['type']}: trial {end['payload']['trial_id']} ended "
      f"({end['payload']['reason']!r})")

sock.close()
server.stop()
print("hung up; server stopped")
