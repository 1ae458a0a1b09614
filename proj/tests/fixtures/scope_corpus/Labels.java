class Labels {
    void scan(int[][] grid) {
        outer:
        for (int[] row : grid) {
            for (int cell : row) {
                if (cell < 0) continue outer;
                if (cell == 0) break outer;
            }
        }
    }
}
