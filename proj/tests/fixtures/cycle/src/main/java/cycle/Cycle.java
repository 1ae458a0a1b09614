package cycle;

public class Cycle {
    private boolean flag;

    public boolean a() {
        flag = !flag;
        return flag;
    }

    public boolean b() {
        return !a();
    }
}
