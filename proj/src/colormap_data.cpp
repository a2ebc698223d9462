#include "depthkit/datapipe.hpp"

namespace dk {

// Reversed "inferno" palette, 256 RGB entries. Generated once from the
// matplotlib 3.10 reference tables (colormaps["inferno_r"], 8-bit rounded)
// and committed as data; the polynomial fit is never evaluated at runtime.
// Entry 0 is the bright-yellow near end, entry 255 the near-black far end.
const ColorMap& inferno_reversed() {
    static const ColorMap map = {{{
    {252, 255, 164}, {250, 253, 161}, {249, 252, 157}, {248, 251, 154}, {246, 250, 150}, {245, 249, 146},
    {244, 248, 142}, {243, 246, 138}, {243, 245, 134}, {242, 244, 130}, {242, 242, 125}, {241, 241, 121},
    {241, 239, 117}, {241, 237, 113}, {241, 236, 109}, {242, 234, 105}, {242, 232, 101}, {242, 230, 97},
    {243, 229, 93}, {243, 227, 90}, {244, 225, 86}, {244, 223, 83}, {244, 221, 79}, {245, 219, 76},
    {245, 217, 73}, {246, 215, 70}, {246, 213, 67}, {247, 211, 64}, {247, 209, 61}, {248, 207, 58},
    {248, 205, 55}, {249, 203, 53}, {249, 201, 50}, {249, 199, 47}, {250, 198, 45}, {250, 196, 42},
    {250, 194, 40}, {250, 192, 38}, {251, 190, 35}, {251, 188, 33}, {251, 186, 31}, {251, 184, 29},
    {251, 182, 26}, {252, 180, 24}, {252, 178, 22}, {252, 176, 20}, {252, 174, 18}, {252, 172, 17},
    {252, 170, 15}, {252, 168, 13}, {252, 166, 12}, {252, 165, 10}, {252, 163, 9}, {252, 161, 8},
    {252, 159, 7}, {251, 157, 7}, {251, 155, 6}, {251, 153, 6}, {251, 151, 6}, {251, 150, 6},
    {250, 148, 7}, {250, 146, 7}, {250, 144, 8}, {249, 142, 9}, {249, 140, 10}, {249, 139, 11},
    {248, 137, 12}, {248, 135, 14}, {248, 133, 15}, {247, 132, 16}, {247, 130, 18}, {246, 128, 19},
    {246, 126, 20}, {245, 125, 21}, {245, 123, 23}, {244, 121, 24}, {243, 120, 25}, {243, 118, 27},
    {242, 116, 28}, {241, 115, 29}, {241, 113, 31}, {240, 111, 32}, {239, 110, 33}, {239, 108, 35},
    {238, 106, 36}, {237, 105, 37}, {236, 103, 38}, {235, 102, 40}, {235, 100, 41}, {234, 99, 42},
    {233, 97, 43}, {232, 96, 45}, {231, 94, 46}, {230, 93, 47}, {229, 92, 48}, {228, 90, 49},
    {227, 89, 51}, {226, 87, 52}, {225, 86, 53}, {224, 85, 54}, {223, 83, 55}, {222, 82, 56},
    {221, 81, 58}, {219, 80, 59}, {218, 78, 60}, {217, 77, 61}, {216, 76, 62}, {215, 75, 63},
    {213, 74, 65}, {212, 72, 66}, {211, 71, 67}, {210, 70, 68}, {208, 69, 69}, {207, 68, 70},
    {206, 67, 71}, {204, 66, 72}, {203, 65, 73}, {202, 64, 74}, {200, 63, 75}, {199, 62, 76},
    {198, 61, 77}, {196, 60, 78}, {195, 59, 79}, {193, 58, 80}, {192, 58, 81}, {191, 57, 82},
    {189, 56, 83}, {188, 55, 84}, {186, 54, 85}, {185, 53, 86}, {183, 53, 87}, {182, 52, 88},
    {180, 51, 89}, {179, 50, 90}, {177, 50, 90}, {176, 49, 91}, {174, 48, 92}, {173, 48, 93},
    {171, 47, 94}, {169, 46, 94}, {168, 46, 95}, {166, 45, 96}, {165, 44, 96}, {163, 44, 97},
    {162, 43, 98}, {160, 42, 99}, {159, 42, 99}, {157, 41, 100}, {155, 41, 100}, {154, 40, 101},
    {152, 39, 102}, {151, 39, 102}, {149, 38, 103}, {147, 38, 103}, {146, 37, 104}, {144, 37, 104},
    {143, 36, 105}, {141, 35, 105}, {140, 35, 105}, {138, 34, 106}, {136, 34, 106}, {135, 33, 107},
    {133, 33, 107}, {132, 32, 107}, {130, 32, 108}, {128, 31, 108}, {127, 30, 108}, {125, 30, 109},
    {124, 29, 109}, {122, 29, 109}, {120, 28, 109}, {119, 28, 109}, {117, 27, 110}, {116, 26, 110},
    {114, 26, 110}, {113, 25, 110}, {111, 25, 110}, {109, 24, 110}, {108, 24, 110}, {106, 23, 110},
    {105, 22, 110}, {103, 22, 110}, {101, 21, 110}, {100, 21, 110}, {98, 20, 110}, {97, 19, 110},
    {95, 19, 110}, {93, 18, 110}, {92, 18, 110}, {90, 17, 110}, {89, 16, 110}, {87, 16, 110},
    {85, 15, 109}, {84, 15, 109}, {82, 14, 109}, {81, 14, 108}, {79, 13, 108}, {77, 13, 108},
    {76, 12, 107}, {74, 12, 107}, {73, 11, 106}, {71, 11, 106}, {69, 10, 105}, {68, 10, 104},
    {66, 10, 104}, {64, 10, 103}, {62, 9, 102}, {61, 9, 101}, {59, 9, 100}, {57, 9, 99},
    {56, 9, 98}, {54, 9, 97}, {52, 10, 95}, {50, 10, 94}, {49, 10, 92}, {47, 10, 91},
    {45, 11, 89}, {43, 11, 87}, {41, 11, 85}, {40, 11, 83}, {38, 12, 81}, {36, 12, 79},
    {35, 12, 76}, {33, 12, 74}, {31, 12, 72}, {30, 12, 69}, {28, 12, 67}, {27, 12, 65},
    {25, 12, 62}, {24, 12, 60}, {22, 11, 57}, {21, 11, 55}, {20, 11, 52}, {18, 10, 50},
    {17, 10, 48}, {16, 9, 45}, {14, 9, 43}, {13, 8, 41}, {12, 8, 38}, {11, 7, 36},
    {10, 7, 34}, {9, 6, 31}, {8, 5, 29}, {7, 5, 27}, {6, 4, 25}, {5, 4, 23},
    {4, 3, 20}, {4, 3, 18}, {3, 2, 16}, {2, 2, 14}, {2, 2, 12}, {2, 1, 10},
    {1, 1, 8}, {1, 1, 6}, {1, 0, 5}, {0, 0, 4},
    }}};
    return map;
}

}  // namespace dk
