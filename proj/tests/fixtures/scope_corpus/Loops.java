import java.util.List;

class Loops {
    int total(List<Integer> xs) {
        int sum = 0;
        for (int i = 0; i < xs.size(); i++) {
            sum += xs.get(i);
        }
        for (Integer x : xs) {
            sum += x;
        }
        return sum;
    }
}
