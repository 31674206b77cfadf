#include "rig/benchmark/benchmark.hpp"

namespace rig::bench {

// Found by a seeded search over spawn pairs, keeping the first pairs whose
// route fits the category and which the expert drives to the goal with no
// collision or lane invasion in at most 900 steps:
//   AbnormalTurns  town 3, a turn sharper than 108 degrees, 40 vehicles
//   BusyTown       town 1, 60-80 vehicles and 8 pedestrians
//   Hills          town 1, no turn sharper than 36 degrees (the world is flat)
//   Roundabouts    town 2, the route enters the ring, 30 vehicles
std::vector<SuiteEntry> default_suite() {
  return {
    {"AbnormalTurns_0", "AbnormalTurns", {3, 132, 57, 40, 0, 1539u, 1000}},
    {"AbnormalTurns_1", "AbnormalTurns", {3, 131, 65, 40, 0, 1980u, 1000}},
    {"AbnormalTurns_2", "AbnormalTurns", {3, 184, 134, 40, 0, 2051u, 1000}},
    {"AbnormalTurns_3", "AbnormalTurns", {3, 180, 173, 40, 0, 2316u, 1000}},
    {"AbnormalTurns_4", "AbnormalTurns", {3, 49, 57, 40, 0, 2395u, 1000}},
    {"AbnormalTurns_5", "AbnormalTurns", {3, 186, 127, 40, 0, 2576u, 1000}},
    {"AbnormalTurns_6", "AbnormalTurns", {3, 105, 97, 40, 0, 2993u, 1000}},
    {"BusyTown_0", "BusyTown", {1, 150, 61, 60, 8, 1001u, 1000}},
    {"BusyTown_1", "BusyTown", {1, 58, 177, 65, 8, 1025u, 1000}},
    {"BusyTown_2", "BusyTown", {1, 139, 129, 70, 8, 1035u, 1000}},
    {"BusyTown_3", "BusyTown", {1, 171, 144, 75, 8, 1038u, 1000}},
    {"BusyTown_4", "BusyTown", {1, 42, 175, 80, 8, 1056u, 1000}},
    {"BusyTown_5", "BusyTown", {1, 174, 50, 60, 8, 1057u, 1000}},
    {"BusyTown_6", "BusyTown", {1, 102, 108, 65, 8, 1061u, 1000}},
    {"BusyTown_7", "BusyTown", {1, 29, 91, 70, 8, 1069u, 1000}},
    {"BusyTown_8", "BusyTown", {1, 174, 51, 75, 8, 1080u, 1000}},
    {"BusyTown_9", "BusyTown", {1, 150, 160, 80, 8, 1083u, 1000}},
    {"BusyTown_10", "BusyTown", {1, 41, 176, 60, 8, 1087u, 1000}},
    {"Hills_0", "Hills", {1, 120, 125, 20, 0, 1131u, 1000}},
    {"Hills_1", "Hills", {1, 85, 82, 20, 0, 1240u, 1000}},
    {"Hills_2", "Hills", {1, 166, 163, 20, 0, 1293u, 1000}},
    {"Hills_3", "Hills", {1, 141, 143, 20, 0, 1323u, 1000}},
    {"Roundabouts_0", "Roundabouts", {2, 110, 124, 30, 0, 1279u, 1000}},
    {"Roundabouts_1", "Roundabouts", {2, 115, 118, 30, 0, 1319u, 1000}},
    {"Roundabouts_2", "Roundabouts", {2, 128, 135, 30, 0, 1522u, 1000}},
    {"Roundabouts_3", "Roundabouts", {2, 98, 106, 30, 0, 1748u, 1000}},
    {"Roundabouts_4", "Roundabouts", {2, 115, 123, 30, 0, 1784u, 1000}},
  };
}

}  // namespace rig::bench
