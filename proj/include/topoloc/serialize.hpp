#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topoloc/grid_builder.hpp"
#include "topoloc/place_recognition.hpp"

namespace topoloc {

// Grid blob: header (magic "TLGR", u16 version, u16 reserved, f64
// resolution, u32 width, u32 height, f64 origin x/y/theta) + u32 run count
// + run-length-encoded cells, one u16 per run (class in the low 2 bits,
// run length - 1 in the high 14). Byte layouts in docs/FORMATS.md.
void append_grid(std::vector<uint8_t>& out, const OccupancyGrid& grid);
OccupancyGrid parse_grid(const std::vector<uint8_t>& data, size_t& offset);

// Location blob file: magic "TLOC", u16 version, u16 flags, u32 payload
// size, payload (grid, descriptor, both feature sets), u32 crc32 of the
// payload. Any header/magic/checksum mismatch raises CorruptMap. Derived
// data (wall/curb point lists, distance maps) is rebuilt by the caller.
void write_location_blob(const std::string& path, const ScanRecord& rec,
                         const PlaceDescriptor& descriptor);
void read_location_blob(const std::string& path, ScanRecord& rec,
                        PlaceDescriptor& descriptor);

uint32_t crc32_of(const uint8_t* data, size_t size);

}  // namespace topoloc
