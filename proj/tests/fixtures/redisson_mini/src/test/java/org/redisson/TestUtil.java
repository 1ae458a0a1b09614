package org.redisson;

public final class TestUtil {

    private TestUtil() {
    }

    public static void logTestResult(String name, int status) {
        System.out.println(name + " -> " + status);
    }
}
