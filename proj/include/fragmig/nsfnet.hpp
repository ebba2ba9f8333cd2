#pragma once

#include <string_view>

#include "fragmig/topology.hpp"

namespace fragmig {

// NSFNET: 14 nodes, 22 links; 32 GHz / 64 GB nodes, 5 MBps links, 1-5 ms delays.
// Kept identical to data/nsfnet.json.
inline constexpr std::string_view kNsfnetDocument = R"json({
  "name": "nsfnet",
  "nodes": [
    {"id": 0, "cpu": 32.0, "mem": 64.0},
    {"id": 1, "cpu": 32.0, "mem": 64.0},
    {"id": 2, "cpu": 32.0, "mem": 64.0},
    {"id": 3, "cpu": 32.0, "mem": 64.0},
    {"id": 4, "cpu": 32.0, "mem": 64.0},
    {"id": 5, "cpu": 32.0, "mem": 64.0},
    {"id": 6, "cpu": 32.0, "mem": 64.0},
    {"id": 7, "cpu": 32.0, "mem": 64.0},
    {"id": 8, "cpu": 32.0, "mem": 64.0},
    {"id": 9, "cpu": 32.0, "mem": 64.0},
    {"id": 10, "cpu": 32.0, "mem": 64.0},
    {"id": 11, "cpu": 32.0, "mem": 64.0},
    {"id": 12, "cpu": 32.0, "mem": 64.0},
    {"id": 13, "cpu": 32.0, "mem": 64.0}
  ],
  "links": [
    {"u": 0, "v": 1, "bandwidth": 5.0, "delay_ms": 2.0},
    {"u": 0, "v": 2, "bandwidth": 5.0, "delay_ms": 3.0},
    {"u": 0, "v": 7, "bandwidth": 5.0, "delay_ms": 4.0},
    {"u": 1, "v": 2, "bandwidth": 5.0, "delay_ms": 1.0},
    {"u": 1, "v": 3, "bandwidth": 5.0, "delay_ms": 2.0},
    {"u": 2, "v": 5, "bandwidth": 5.0, "delay_ms": 3.0},
    {"u": 3, "v": 4, "bandwidth": 5.0, "delay_ms": 5.0},
    {"u": 3, "v": 10, "bandwidth": 5.0, "delay_ms": 4.0},
    {"u": 4, "v": 5, "bandwidth": 5.0, "delay_ms": 1.0},
    {"u": 4, "v": 6, "bandwidth": 5.0, "delay_ms": 2.0},
    {"u": 4, "v": 9, "bandwidth": 5.0, "delay_ms": 3.0},
    {"u": 5, "v": 9, "bandwidth": 5.0, "delay_ms": 2.0},
    {"u": 5, "v": 12, "bandwidth": 5.0, "delay_ms": 1.0},
    {"u": 6, "v": 7, "bandwidth": 5.0, "delay_ms": 4.0},
    {"u": 7, "v": 8, "bandwidth": 5.0, "delay_ms": 2.0},
    {"u": 8, "v": 9, "bandwidth": 5.0, "delay_ms": 3.0},
    {"u": 8, "v": 11, "bandwidth": 5.0, "delay_ms": 5.0},
    {"u": 8, "v": 13, "bandwidth": 5.0, "delay_ms": 1.0},
    {"u": 10, "v": 11, "bandwidth": 5.0, "delay_ms": 2.0},
    {"u": 10, "v": 13, "bandwidth": 5.0, "delay_ms": 4.0},
    {"u": 11, "v": 12, "bandwidth": 5.0, "delay_ms": 3.0},
    {"u": 12, "v": 13, "bandwidth": 5.0, "delay_ms": 2.0}
  ]
}
)json";

inline Network nsfnet() { return parse_topology(kNsfnetDocument); }

}  // namespace fragmig
